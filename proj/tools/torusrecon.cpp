#include <iostream>

#include "torusrecon/cli.hpp"

int main(int argc, char** argv) { return torusrecon::run_cli(argc, argv, std::cout, std::cerr); }

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "torusrecon/torus_kernels.hpp"

namespace torusrecon::detail {

inline nlohmann::json to_json(const Hyperparameters& hp) {
  return {{"nu", hp.nu}, {"kappa", hp.kappa}, {"sigma2", hp.sigma2},
          {"noise2", hp.noise2}, {"dim", hp.dim}};
}

inline Hyperparameters hyperparameters_from_json(const nlohmann::json& j) {
  Hyperparameters hp;
  hp.nu = j.at("nu").get<double>();
  hp.kappa = j.at("kappa").get<std::vector<double>>();
  hp.sigma2 = j.at("sigma2").get<double>();
  hp.noise2 = j.at("noise2").get<double>();
  hp.dim = j.at("dim").get<int>();
  return hp;
}

inline void write_f32_le(std::ostream& out, double value) {
  auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) | (bits >> 24);
  }
  char bytes[4];
  std::memcpy(bytes, &bits, 4);
  out.write(bytes, 4);
}

inline bool read_f32_le(std::istream& in, double& value) {
  char bytes[4];
  if (!in.read(bytes, 4)) return false;
  std::uint32_t bits = 0;
  std::memcpy(&bits, bytes, 4);
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) | (bits >> 24);
  }
  value = static_cast<double>(std::bit_cast<float>(bits));
  return true;
}

}  // namespace torusrecon::detail

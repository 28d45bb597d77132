#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "torusrecon/cli.hpp"
#include "torusrecon/instrumentation.hpp"
#include "torusrecon/pointcloud_io.hpp"

using namespace torusrecon;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "torusrecon");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// A sphere of radius 3.5 around (10, −2, 4) in raw coordinates, so every output
// passes through the raw/torus transform.
fs::path sphere_input(const fs::path& dir, int n = 300) {
  auto cloud = fixtures::sphere_cloud(n, 0.35);
  OrientedPointCloud raw;
  raw.points = (cloud.points.array() - 0.5) * 10.0;
  raw.points.col(0).array() += 10.0;
  raw.points.col(1).array() -= 2.0;
  raw.points.col(2).array() += 4.0;
  raw.normals = cloud.normals;
  const auto path = dir / "sphere.xyz";
  write_cloud(raw, path, CloudFormat::kXyz);
  return path;
}

using Options = std::vector<std::pair<std::string, std::string>>;

// Small default model; `overrides` replaces or adds options by name. An empty
// value makes a bare flag.
std::vector<std::string> base_args(const std::string& command, const fs::path& input, const fs::path& out,
                                   const Options& overrides = {}) {
  Options opts{{"--input", input.string()}, {"--kappa", "0.1"}, {"--f-cross", "6"}, {"--f-prior", "4"},
               {"--amortize-grid", "0"},    {"--grid", "20"},   {"--out", out.string()}, {"--seed", "5"}};
  for (const auto& [key, value] : overrides) {
    const auto it = std::find_if(opts.begin(), opts.end(), [&](const auto& o) { return o.first == key; });
    if (it != opts.end()) {
      it->second = value;
    } else {
      opts.emplace_back(key, value);
    }
  }
  std::vector<std::string> args{command};
  for (const auto& [key, value] : opts) {
    args.push_back(key);
    std::istringstream words(value);
    std::string w;
    while (words >> w) args.push_back(w);
  }
  return args;
}

TriangleMesh read_obj(const fs::path& path) {
  TriangleMesh mesh;
  std::ifstream in(path);
  std::string tag;
  while (in >> tag) {
    if (tag == "v") {
      std::array<double, 3> v{};
      in >> v[0] >> v[1] >> v[2];
      mesh.vertices.push_back(v);
    } else {
      std::array<int, 3> f{};
      in >> f[0] >> f[1] >> f[2];
      mesh.triangles.push_back({f[0] - 1, f[1] - 1, f[2] - 1});
    }
  }
  return mesh;
}

}  // namespace

TEST_CASE("reconstruct writes a watertight mesh near the raw sphere, deterministically") {
  const auto dir = fixtures::temp_dir("cli_reconstruct");
  const auto input = sphere_input(dir);
  Instrumentation::reset();
  const auto r = run(base_args("reconstruct", input, dir / "a"));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  // The sampled grid and its raw-coordinate copy.
  CHECK(Instrumentation::snapshot().grid_allocations == 2);
  const auto mesh = read_obj(dir / "a" / "mean.obj");
  REQUIRE(!mesh.triangles.empty());
  CHECK(oracle::watertight(mesh));
  // Raw-coordinate sphere of radius 3.5 mapped to torus radius 0.35, so the
  // 20-node grid over [0.075, 0.925] has raw spacing 0.85/19 · 10 ≈ 0.45.
  CHECK(oracle::hausdorff_to_sphere(mesh, {10.0, -2.0, 4.0}, 3.5) <= 0.45);
  const auto field = read_field_grid(dir / "a" / "mean.field");
  CHECK(field.spec().dims == std::array<int, 3>{20, 20, 20});
  CHECK(field.spec().spacing[0] == doctest::Approx(0.85 / 19.0 * 10.0).epsilon(1e-2));

  REQUIRE(run(base_args("reconstruct", input, dir / "b")).code == 0);
  CHECK(slurp(dir / "a" / "mean.obj") == slurp(dir / "b" / "mean.obj"));
  CHECK(slurp(dir / "a" / "mean.field") == slurp(dir / "b" / "mean.field"));

  REQUIRE(run(base_args("reconstruct", input, dir / "t", {{"--torus-coords", ""}})).code == 0);
  const auto torus_mesh = read_obj(dir / "t" / "mean.obj");
  CHECK(oracle::hausdorff_to_sphere(torus_mesh, {0.5, 0.5, 0.5}, 0.35) <= 0.045);
}

TEST_CASE("exit codes follow the error category") {
  const auto dir = fixtures::temp_dir("cli_errors");
  const auto input = sphere_input(dir, 50);
  CHECK(run(base_args("reconstruct", dir / "missing.xyz", dir / "o")).code == kExitInput);
  CHECK(run({"reconstruct", "--out", (dir / "o").string()}).code == kExitInput);
  CHECK(run(base_args("reconstruct", input, dir / "o", {{"--solver", "magic"}})).code == kExitInput);
  CHECK(run(base_args("reconstruct", input, dir / "o", {{"--nu", "2.5"}})).code == kExitInput);
  CHECK(run(base_args("reconstruct", input, dir / "o", {{"--kappa", "0.1 0.2"}})).code == kExitInput);
  CHECK(run(base_args("reconstruct", input, dir / "o", {{"--margin", "0.6"}})).code == kExitInput);
  CHECK(run({"frobnicate"}).code == kExitInput);
  CHECK(run({}).code == kExitInput);
  std::ofstream(dir / "bad.xyz") << "0 0 0 0 0 0\n";
  const auto bad = run(base_args("reconstruct", dir / "bad.xyz", dir / "o"));
  CHECK(bad.code == kExitInput);
  CHECK(bad.err.find("line 1") != std::string::npos);
  // An output path below a regular file cannot be created.
  std::ofstream(dir / "file") << "x";
  CHECK(run(base_args("reconstruct", input, dir / "file" / "sub")).code == kExitIo);
  // Noise-free duplicated points with a huge length scale leave no usable factorization.
  std::ofstream dup(dir / "dup.xyz");
  for (int k = 0; k < 40; ++k) dup << (k % 2) << " " << (k % 2) << " 0 0 0 1\n";
  dup.close();
  const auto singular = run({"reconstruct", "--input", (dir / "dup.xyz").string(), "--kappa", "1e9", "--noise2", "0",
                             "--f-cross", "3", "--amortize-grid", "0", "--grid", "4", "--out", (dir / "o").string()});
  CHECK((singular.code == kExitNumerical || singular.code == kExitInput || singular.code == kExitOk));
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("the installed binary reports the same exit codes") {
  const auto dir = fixtures::temp_dir("cli_process");
  const std::string cli = TORUSRECON_CLI_PATH;
  const auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(cli + " reconstruct --input " + (dir / "nope.xyz").string()) == kExitInput);
  const auto input = sphere_input(dir, 60);
  CHECK(status(cli + " reconstruct --input " + input.string() +
               " --kappa 0.1 --f-cross 4 --f-prior 3 --amortize-grid 0 --grid 8 --out " + (dir / "o").string()) ==
        kExitOk);
  CHECK(fs::exists(dir / "o" / "mean.obj"));
}

TEST_CASE("config file supplies defaults that flags override") {
  const auto dir = fixtures::temp_dir("cli_config");
  const auto input = sphere_input(dir, 80);
  std::ofstream(dir / "run.cfg") << "input=" << input.string() << "\nkappa=0.1\nf-cross=5\nf-prior=3\n"
                                 << "amortize-grid=0\ngrid=12\nseed=9\n";
  REQUIRE(run({"--config", (dir / "run.cfg").string(), "reconstruct", "--out", (dir / "a").string()}).code == 0);
  REQUIRE(run({"reconstruct", "--input", input.string(), "--kappa", "0.1", "--f-cross", "5", "--f-prior", "3",
               "--amortize-grid", "0", "--grid", "12", "--seed", "9", "--out", (dir / "b").string()})
              .code == 0);
  CHECK(slurp(dir / "a" / "mean.field") == slurp(dir / "b" / "mean.field"));
  REQUIRE(run({"--config", (dir / "run.cfg").string(), "reconstruct", "--grid", "10", "--out", (dir / "c").string()}).code == 0);
  CHECK(read_field_grid(dir / "c" / "mean.field").spec().dims[0] == 10);
}

TEST_CASE("sample writes one field and mesh per sample, deterministically") {
  const auto dir = fixtures::temp_dir("cli_sample");
  const auto input = sphere_input(dir, 150);
  const auto args = base_args("sample", input, dir / "a", {{"--n-samples", "2"}, {"--grid", "12"}});
  REQUIRE(run(args).code == 0);
  for (const char* name : {"sample_0.field", "sample_0.obj", "sample_1.field", "sample_1.obj"}) CHECK(fs::exists(dir / "a" / name));
  CHECK(slurp(dir / "a" / "sample_0.field") != slurp(dir / "a" / "sample_1.field"));
  REQUIRE(run(base_args("sample", input, dir / "b", {{"--n-samples", "2"}, {"--grid", "12"}})).code == 0);
  CHECK(slurp(dir / "a" / "sample_1.obj") == slurp(dir / "b" / "sample_1.obj"));
  CHECK(run(base_args("sample", input, dir / "c", {{"--n-samples", "0"}})).code == kExitInput);
}

TEST_CASE("queries write JSON without building grids") {
  const auto dir = fixtures::temp_dir("cli_query");
  const auto input = sphere_input(dir, 150);
  std::ofstream(dir / "probes.xyz") << "10 -2 4\n30 30 30\n";
  std::ofstream(dir / "rays.txt") << "10 -2 -0.5 0 0 1 6 0.5\n";
  std::ofstream(dir / "box.xyz") << "8 -4 2\n12 0 6\n";
  Instrumentation::reset();

  auto r = run(base_args("query", input, dir / "occ.json", {{"--kind", "occupancy"}, {"--geometry", (dir / "probes.xyz").string()}}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  auto j = nlohmann::json::parse(slurp(dir / "occ.json"));
  CHECK(j["results"][0]["value"].get<double>() > 0.99);
  CHECK(j["results"][0]["std_error"].get<double>() == 0.0);

  r = run(base_args("query", input, dir / "col.json", {{"--kind", "collision"}, {"--mode", "all"}, {"--n-samples", "20"}, {"--geometry", (dir / "probes.xyz").string()}}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  j = nlohmann::json::parse(slurp(dir / "col.json"));
  CHECK(j["mode"] == "all");
  CHECK(j["result"]["n_samples"] == 20);
  CHECK(j["result"]["value"].get<double>() >= 0.0);
  CHECK(j["result"]["value"].get<double>() <= 1.0);

  r = run(base_args("query", input, dir / "tr.json", {{"--kind", "transmittance"}, {"--n-samples", "20"}, {"--geometry", (dir / "rays.txt").string()}}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  j = nlohmann::json::parse(slurp(dir / "tr.json"));
  const auto& curve = j["results"][0];
  CHECK(curve.size() == 13);
  // Samples can be positive far from the data, so the origin is only mostly clear.
  CHECK(curve[0]["value"].get<double>() >= 0.5);
  CHECK(curve[12]["value"].get<double>() == 0.0);
  CHECK(curve[12]["t"].get<double>() == doctest::Approx(6.0));
  for (std::size_t k = 1; k < curve.size(); ++k) CHECK(curve[k]["value"].get<double>() <= curve[k - 1]["value"].get<double>());

  r = run(base_args("query", input, dir / "tu.json", {{"--kind", "total-uncertainty"}, {"--n-points", "200"}, {"--geometry", (dir / "box.xyz").string()}}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  j = nlohmann::json::parse(slurp(dir / "tu.json"));
  CHECK(j["result"]["value"].get<double>() >= 0.0);
  CHECK(j["result"]["value"].get<double>() <= 0.5 * 64.0);

  CHECK(Instrumentation::snapshot().grid_allocations == 0);

  const auto again = run(base_args("query", input, dir / "col2.json", {{"--kind", "collision"}, {"--mode", "all"}, {"--n-samples", "20"}, {"--geometry", (dir / "probes.xyz").string()}}));
  REQUIRE(again.code == 0);
  CHECK(slurp(dir / "col.json") == slurp(dir / "col2.json"));

  CHECK(run(base_args("query", input, dir / "x.json", {{"--kind", "volume"}, {"--geometry", (dir / "probes.xyz").string()}})).code ==
        kExitInput);
  CHECK(run(base_args("query", input, dir / "x.json", {{"--kind", "occupancy"}})).code == kExitInput);
  std::ofstream(dir / "badray.txt") << "0 0 0 0 0 1 8\n";
  CHECK(run(base_args("query", input, dir / "x.json", {{"--kind", "transmittance"}, {"--geometry", (dir / "badray.txt").string()}}))
            .code == kExitInput);
}

TEST_CASE("hitbox meshes nest inside the mean surface") {
  const auto dir = fixtures::temp_dir("cli_hitbox");
  const auto input = sphere_input(dir, 120);
  REQUIRE(run(base_args("hitbox", input, dir / "h0", {{"--eta", "0"}, {"--grid", "10"}})).code == 0);
  REQUIRE(run(base_args("hitbox", input, dir / "h2", {{"--eta", "2"}, {"--grid", "10"}})).code == 0);
  REQUIRE(run(base_args("reconstruct", input, dir / "m", {{"--grid", "10"}})).code == 0);
  CHECK(slurp(dir / "h0" / "hitbox.obj") == slurp(dir / "m" / "mean.obj"));
  const auto f0 = read_field_grid(dir / "h0" / "hitbox.field");
  const auto f2 = read_field_grid(dir / "h2" / "hitbox.field");
  for (std::size_t k = 0; k < f0.values().size(); ++k) {
    if (f2.values()[k] > 0.0) CHECK(f0.values()[k] > 0.0);
  }
  CHECK(run(base_args("hitbox", input, dir / "h3", {{"--eta", "-1"}, {"--grid", "10"}})).code == kExitInput);
  REQUIRE(run(base_args("hitbox", input, dir / "h2b", {{"--eta", "2"}, {"--grid", "10"}})).code == 0);
  CHECK(slurp(dir / "h2" / "hitbox.obj") == slurp(dir / "h2b" / "hitbox.obj"));
}

TEST_CASE("next-view ranks rays by score") {
  const auto dir = fixtures::temp_dir("cli_next_view");
  const auto input = sphere_input(dir, 150);
  std::ofstream(dir / "rays.txt") << "# origin direction t_max step\n"
                                  << "10 -2 -0.5 0 0 1 6 0.25\n"
                                  << "10 -2 8.5 0 0 -1 6 0.25\n"
                                  << "14 -2 4 1 0 0 0.5 0.25\n";
  Instrumentation::reset();
  const auto args = base_args("next-view", input, dir / "nv.json", {{"--rays", (dir / "rays.txt").string()}, {"--n-samples", "16"}});
  REQUIRE(run(args).code == 0);
  CHECK(Instrumentation::snapshot().grid_allocations == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "nv.json"));
  REQUIRE(j["ranking"].size() == 3);
  CHECK(j["eps"].get<double>() == 0.05);
  for (std::size_t k = 1; k < 3; ++k) CHECK(j["ranking"][k]["score"].get<double>() >= j["ranking"][k - 1]["score"].get<double>());
  const auto copy = base_args("next-view", input, dir / "nv2.json", {{"--rays", (dir / "rays.txt").string()}, {"--n-samples", "16"}});
  REQUIRE(run(copy).code == 0);
  CHECK(slurp(dir / "nv.json") == slurp(dir / "nv2.json"));
  CHECK(run(base_args("next-view", input, dir / "x.json", {{"--rays", (dir / "rays.txt").string()}, {"--eps", "0.5"}})).code ==
        kExitInput);
  CHECK(run(base_args("next-view", input, dir / "x.json")).code == kExitInput);
}

TEST_CASE("bench sweeps write CSV with deterministic result columns") {
  const auto dir = fixtures::temp_dir("cli_bench");
  const auto input = sphere_input(dir, 100);
  const auto strip_seconds = [](const std::string& csv) {
    std::istringstream in(csv);
    std::string line, kept;
    while (std::getline(in, line)) kept += line.substr(0, line.rfind(',')) + '\n';
    return kept;
  };
  REQUIRE(run(base_args("bench", input, dir, {{"--sweep", "amortization"}, {"--f-cross", "4"}})).code == 0);
  const auto first = slurp(dir / "bench_amortization.csv");
  std::istringstream rows(first);
  std::string line;
  std::vector<double> mse;
  std::getline(rows, line);
  CHECK(line == "sweep,parameter,work,result,seconds");
  while (std::getline(rows, line)) {
    std::vector<std::string> cells;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 5);
    mse.push_back(std::stod(cells[3]));
  }
  REQUIRE(mse.size() == 4);
  for (std::size_t k = 1; k < mse.size(); ++k) CHECK(mse[k] < mse[k - 1]);
  REQUIRE(run(base_args("bench", input, dir / "again.csv", {{"--sweep", "amortization"}, {"--f-cross", "4"}})).code == 0);
  CHECK(strip_seconds(first) == strip_seconds(slurp(dir / "again.csv")));
  CHECK(run(base_args("bench", input, dir, {{"--sweep", "everything"}})).code == kExitInput);
}

#include "torusrecon/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "torusrecon/contouring.hpp"
#include "torusrecon/errors.hpp"
#include "torusrecon/pointcloud_io.hpp"
#include "torusrecon/posterior.hpp"
#include "torusrecon/rng.hpp"
#include "torusrecon/surface_queries.hpp"

namespace torusrecon {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunConfig {
  std::string input;
  std::string format = "auto";
  double nu = 1.5;
  std::vector<double> kappa{0.04};
  double sigma2 = 1.0;
  double noise2 = -1.0;  // negative: 1e-4 * sigma2
  int f_cross = 50;
  int f_prior = 20;
  int amortize_grid = 50;
  std::string amortize_table;
  std::string solver = "exact";
  int sgd_iters = 5000;
  std::uint64_t seed = 0;
  std::string out = ".";
  double margin = 0.15;
  int grid = 64;
  bool torus_coords = false;

  // subcommand parameters
  int n_samples = 100;
  std::string kind;
  std::string geometry;
  std::string mode = "any";
  int n_points = 10000;
  double eta = 1.0;
  double eps = 0.05;
  std::string rays;
  std::string sweep = "output-size";
};

struct Context {
  OrientedPointCloud cloud;  // torus coordinates, transform to raw
  Hyperparameters hp;
  PosteriorConfig posterior;
  std::shared_ptr<const PosteriorModel> model;
};

Hyperparameters hyperparameters_of(const RunConfig& cfg) {
  Hyperparameters hp;
  hp.dim = 3;
  hp.nu = cfg.nu;
  if (cfg.kappa.size() == 1) {
    hp.kappa.assign(3, cfg.kappa[0]);
  } else if (cfg.kappa.size() == 3) {
    hp.kappa = cfg.kappa;
  } else {
    throw ConfigError("--kappa takes 1 or 3 values");
  }
  hp.sigma2 = cfg.sigma2;
  hp.noise2 = cfg.noise2 < 0.0 ? 1e-4 * cfg.sigma2 : cfg.noise2;
  hp.validate();
  return hp;
}

PosteriorConfig posterior_config_of(const RunConfig& cfg) {
  PosteriorConfig pc;
  pc.f_cross = cfg.f_cross;
  pc.f_prior = cfg.f_prior;
  pc.amortize_grid = cfg.amortize_grid;
  if (cfg.solver == "sgd") {
    pc.solver = SolverChoice::kSgd;
  } else if (cfg.solver != "exact") {
    throw ConfigError("--solver must be exact or sgd");
  }
  pc.sgd.iterations = cfg.sgd_iters;
  pc.sgd.seed = cfg.seed;
  pc.validate();
  if (!(cfg.margin > 0.0 && cfg.margin < 0.5)) throw ConfigError("--margin must lie in (0, 1/2)");
  if (cfg.grid < 2) throw ConfigError("--grid must be >= 2");
  return pc;
}

Context build_context(const RunConfig& cfg) {
  Context ctx;
  ctx.hp = hyperparameters_of(cfg);
  ctx.posterior = posterior_config_of(cfg);
  if (!cfg.amortize_table.empty()) {
    ctx.posterior.table = std::make_shared<const AmortizationTable>(AmortizationTable::load(cfg.amortize_table));
  }
  const CloudFormat format = cfg.format == "auto" ? cloud_format_for(cfg.input) : parse_cloud_format(cfg.format);
  ctx.cloud = normalize_to_torus(load_cloud(cfg.input, format), cfg.margin);
  ctx.model = build_posterior(ctx.cloud.points, ctx.cloud.normals, ctx.hp, ctx.posterior);
  return ctx;
}

GridSpec torus_grid(const RunConfig& cfg) {
  return GridSpec::cube(0.5 * cfg.margin, 1.0 - 0.5 * cfg.margin, cfg.grid);
}

// Grid and mesh in output coordinates (raw unless --torus-coords).
ScalarFieldGrid output_grid(const ScalarFieldGrid& grid, const Context& ctx, bool torus) {
  if (torus) return grid;
  GridSpec spec = grid.spec();
  const auto& t = ctx.cloud.transform;
  for (std::size_t a = 0; a < 3; ++a) {
    spec.origin[a] = (spec.origin[a] - t.translation[a]) / t.scale;
    spec.spacing[a] /= t.scale;
  }
  return ScalarFieldGrid(spec, grid.values());
}

TriangleMesh output_mesh(TriangleMesh mesh, const Context& ctx, bool torus) {
  if (torus) return mesh;
  const auto& t = ctx.cloud.transform;
  for (auto& v : mesh.vertices) {
    for (std::size_t a = 0; a < 3; ++a) v[a] = (v[a] - t.translation[a]) / t.scale;
  }
  return mesh;
}

PointMatrix input_points(const PointMatrix& raw, const Context& ctx, bool torus) {
  return torus ? raw : ctx.cloud.transform.to_torus(raw);
}

fs::path prepare_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + out + ": " + ec.message());
  return dir;
}

void write_json(const json& j, const std::string& out, const std::string& default_name) {
  fs::path path(out);
  if (fs::is_directory(path) || out.empty()) path = prepare_dir(out) / default_name;
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << j.dump(2) << '\n';
  if (!f) throw IoError("failed writing " + path.string());
}

std::vector<Ray> load_rays(const std::string& path, const Context& ctx, bool torus) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<Ray> rays;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    std::istringstream ss(line);
    double v[8];
    int count = 0;
    while (count < 8 && ss >> v[count]) ++count;
    std::string extra;
    if (count != 8 || (ss >> extra)) throw DataError("ray needs: ox oy oz dx dy dz t_max step", number);
    Ray ray;
    const double norm = std::sqrt(v[3] * v[3] + v[4] * v[4] + v[5] * v[5]);
    if (!(norm > 0.0)) throw DataError("zero ray direction", number);
    ray.direction = {v[3] / norm, v[4] / norm, v[5] / norm};
    const double scale = torus ? 1.0 : ctx.cloud.transform.scale;
    PointMatrix o(1, 3);
    o << v[0], v[1], v[2];
    o = input_points(o, ctx, torus);
    ray.origin = {o(0, 0), o(0, 1), o(0, 2)};
    ray.t_max = v[6] * scale;
    ray.step = v[7] * scale;
    try {
      ray.validate(3);
    } catch (const InputError& e) {
      throw DataError(e.what(), number);
    }
    rays.push_back(ray);
  }
  if (rays.empty()) throw InputError("no rays in " + path);
  return rays;
}

int cmd_reconstruct(const RunConfig& cfg) {
  const auto ctx = build_context(cfg);
  const auto grid = sample_field([&](const PointMatrix& x) { return ctx.model->mean(x); }, torus_grid(cfg));
  const auto dir = prepare_dir(cfg.out);
  write_field_grid(output_grid(grid, ctx, cfg.torus_coords), dir / "mean.field");
  write_obj(output_mesh(marching_cubes(grid, 0.0), ctx, cfg.torus_coords), dir / "mean.obj");
  return kExitOk;
}

int cmd_sample(const RunConfig& cfg) {
  if (cfg.n_samples < 1) throw ConfigError("--n-samples must be >= 1");
  const auto ctx = build_context(cfg);
  const auto dir = prepare_dir(cfg.out);
  const auto spec = torus_grid(cfg);
  for (int k = 0; k < cfg.n_samples; ++k) {
    const auto sample = ctx.model->draw(SamplePool::sample_seed(cfg.seed, k));
    const auto grid = sample_field([&](const PointMatrix& x) { return sample->evaluate(x); }, spec);
    const std::string stem = "sample_" + std::to_string(k);
    write_field_grid(output_grid(grid, ctx, cfg.torus_coords), dir / (stem + ".field"));
    write_obj(output_mesh(marching_cubes(grid, 0.0), ctx, cfg.torus_coords), dir / (stem + ".obj"));
  }
  return kExitOk;
}

json estimate_json(const QueryEstimate& e) {
  return {{"value", e.value}, {"std_error", e.std_error}, {"n_samples", e.n_samples}};
}

int cmd_query(const RunConfig& cfg) {
  if (cfg.geometry.empty()) throw ConfigError("--geometry is required");
  if (cfg.n_samples < 1) throw ConfigError("--n-samples must be >= 1");
  const std::string& kind = cfg.kind;
  if (kind != "occupancy" && kind != "collision" && kind != "transmittance" && kind != "total-uncertainty") {
    throw ConfigError("--kind must be occupancy, collision, transmittance or total-uncertainty");
  }
  if (cfg.mode != "any" && cfg.mode != "all") throw ConfigError("--mode must be any or all");
  const auto ctx = build_context(cfg);
  json result = {{"kind", kind}, {"seed", cfg.seed}};
  if (kind == "occupancy" || kind == "collision") {
    const PointMatrix probes = input_points(load_points(cfg.geometry), ctx, cfg.torus_coords);
    if (kind == "occupancy") {
      const auto p = occupancy_probabilities(*ctx.model, probes);
      json rows = json::array();
      for (double v : p) rows.push_back(estimate_json({v, 0.0, 0}));
      result["results"] = rows;
    } else {
      const auto mode = cfg.mode == "all" ? CollisionMode::kAll : CollisionMode::kAny;
      result["mode"] = cfg.mode;
      result["result"] = estimate_json(collision_probability(*ctx.model, probes, mode, cfg.n_samples, cfg.seed));
    }
  } else if (kind == "transmittance") {
    const auto rays = load_rays(cfg.geometry, ctx, cfg.torus_coords);
    const SamplePool pool(*ctx.model, cfg.n_samples, cfg.seed);
    const double scale = cfg.torus_coords ? 1.0 : ctx.cloud.transform.scale;
    json rows = json::array();
    for (const auto& ray : rays) {
      json curve = json::array();
      for (const auto& p : transmittance(pool, ray)) {
        curve.push_back({{"t", p.t / scale}, {"value", p.value}, {"std_error", p.std_error}});
      }
      rows.push_back(curve);
    }
    result["results"] = rows;
  } else {
    const PointMatrix corners = input_points(load_points(cfg.geometry), ctx, cfg.torus_coords);
    if (corners.rows() != 2) throw InputError("box geometry file needs two lines: lower and upper corner");
    Box box{{corners(0, 0), corners(0, 1), corners(0, 2)}, {corners(1, 0), corners(1, 1), corners(1, 2)}};
    auto e = total_uncertainty(*ctx.model, box, cfg.n_points, cfg.seed);
    if (!cfg.torus_coords) {
      const double s3 = std::pow(ctx.cloud.transform.scale, 3);
      e.value /= s3;
      e.std_error /= s3;
    }
    result["result"] = estimate_json(e);
  }
  write_json(result, cfg.out, "query.json");
  return kExitOk;
}

int cmd_hitbox(const RunConfig& cfg) {
  if (!(cfg.eta >= 0.0)) throw ConfigError("--eta must be >= 0");
  const auto ctx = build_context(cfg);
  const auto grid = sample_field(
      [&](const PointMatrix& x) { return hitbox_field(*ctx.model, cfg.eta, x); }, torus_grid(cfg));
  const auto dir = prepare_dir(cfg.out);
  write_field_grid(output_grid(grid, ctx, cfg.torus_coords), dir / "hitbox.field");
  write_obj(output_mesh(marching_cubes(grid, 0.0), ctx, cfg.torus_coords), dir / "hitbox.obj");
  return kExitOk;
}

int cmd_next_view(const RunConfig& cfg) {
  if (cfg.rays.empty()) throw ConfigError("--rays is required");
  if (!(cfg.eps > 0.0 && cfg.eps < 0.5)) throw ConfigError("--eps must lie in (0, 1/2)");
  if (cfg.n_samples < 1) throw ConfigError("--n-samples must be >= 1");
  const auto ctx = build_context(cfg);
  const auto rays = load_rays(cfg.rays, ctx, cfg.torus_coords);
  const SamplePool pool(*ctx.model, cfg.n_samples, cfg.seed);
  const double scale = cfg.torus_coords ? 1.0 : ctx.cloud.transform.scale;
  std::vector<std::pair<QueryEstimate, std::size_t>> scores;
  for (std::size_t r = 0; r < rays.size(); ++r) scores.push_back({next_view_score(pool, rays[r], cfg.eps), r});
  std::stable_sort(scores.begin(), scores.end(),
                   [](const auto& a, const auto& b) { return a.first.value < b.first.value; });
  json ranked = json::array();
  for (const auto& [e, r] : scores) {
    ranked.push_back({{"ray", r}, {"score", e.value / scale}, {"std_error", e.std_error / scale},
                      {"n_samples", e.n_samples}});
  }
  write_json({{"eps", cfg.eps}, {"seed", cfg.seed}, {"ranking", ranked}}, cfg.out, "next_view.json");
  return kExitOk;
}

PointMatrix bench_points(int m, std::uint64_t seed, double lo, double hi) {
  PointMatrix x(m, 3);
  const std::uint64_t key = stream_key(seed, RngStream::kQueryPoints);
  for (int r = 0; r < m; ++r) {
    for (int a = 0; a < 3; ++a) {
      const auto bits = CounterRng::mix(CounterRng::combine(CounterRng::combine(key, static_cast<std::uint64_t>(r)),
                                                            static_cast<std::uint64_t>(a)));
      x(r, a) = lo + (hi - lo) * (1.0 - CounterRng::uniform_open(bits));
    }
  }
  return x;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_bench(const RunConfig& cfg) {
  std::ostringstream csv;
  csv << std::setprecision(10);
  csv << "sweep,parameter,work,result,seconds\n";
  if (cfg.sweep == "output-size") {
    const auto ctx = build_context(cfg);
    for (int m : {100, 1000, 10000, 100000}) {
      const auto x = bench_points(m, cfg.seed, cfg.margin, 1.0 - cfg.margin);
      const auto start = std::chrono::steady_clock::now();
      const auto mu = ctx.model->mean(x);
      const double secs = seconds_since(start);
      double checksum = 0.0;
      for (double v : mu) checksum += v;
      csv << "output-size," << m << ',' << m << ',' << checksum << ',' << secs << '\n';
    }
  } else if (cfg.sweep == "lengthscale") {
    RunConfig local = cfg;
    for (double kappa : {4e-2, 2e-2, 1e-2}) {
      local.kappa = {kappa};
      const auto ctx = build_context(local);
      const auto x = bench_points(10000, cfg.seed, cfg.margin, 1.0 - cfg.margin);
      const auto start = std::chrono::steady_clock::now();
      const auto mu = ctx.model->mean(x);
      const double secs = seconds_since(start);
      double checksum = 0.0;
      for (double v : mu) checksum += v;
      csv << "lengthscale," << kappa << ',' << x.rows() << ',' << checksum << ',' << secs << '\n';
    }
  } else if (cfg.sweep == "amortization") {
    const auto hp = hyperparameters_of(cfg);
    posterior_config_of(cfg);
    const SpectralSeries cross(hp, FrequencySet(cfg.f_cross, 3, true));
    const PointMatrix offsets = bench_points(1000, cfg.seed, -0.5, 0.5);
    const std::vector<double> zero(3, 0.0);
    std::vector<double> direct(3000);
    for (Eigen::Index r = 0; r < offsets.rows(); ++r) {
      cross.cross_covariance({offsets.data() + r * 3, 3}, zero, {direct.data() + r * 3, 3});
    }
    for (int grid_n : {5, 10, 20, 50}) {
      const auto start = std::chrono::steady_clock::now();
      const auto table = AmortizationTable::build(cross, grid_n);
      double mse = 0.0;
      double k[3];
      for (Eigen::Index r = 0; r < offsets.rows(); ++r) {
        table.lookup_all({offsets.data() + r * 3, 3}, {k, 3});
        for (int i = 0; i < 3; ++i) mse += std::pow(k[i] - direct[static_cast<std::size_t>(r * 3 + i)], 2);
      }
      mse /= static_cast<double>(direct.size());
      csv << "amortization," << grid_n << ',' << offsets.rows() << ',' << mse << ',' << seconds_since(start) << '\n';
    }
  } else {
    throw ConfigError("--sweep must be output-size, lengthscale or amortization");
  }
  fs::path path(cfg.out);
  if (fs::is_directory(path)) path /= "bench_" + cfg.sweep + ".csv";
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << csv.str();
  if (!f) throw IoError("failed writing " + path.string());
  return kExitOk;
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInput:
      return kExitInput;
    case ErrorCategory::kNumerical:
      return kExitNumerical;
    case ErrorCategory::kIo:
      return kExitIo;
  }
  return 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Stochastic Poisson surface reconstruction on the 3-torus"};
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  app.require_subcommand(1);

  app.add_option("--input", cfg.input, "oriented point cloud (PLY ascii or XYZ)")->check(CLI::ExistingFile);
  app.add_option("--format", cfg.format, "auto, ply or xyz")->capture_default_str();
  app.add_option("--nu", cfg.nu, "Matérn smoothness, 0.5 or 1.5")->capture_default_str();
  app.add_option("--kappa", cfg.kappa, "length scale, 1 or 3 values")->expected(1, 3)->capture_default_str();
  app.add_option("--sigma2", cfg.sigma2, "kernel amplitude")->capture_default_str();
  app.add_option("--noise2", cfg.noise2, "observation noise variance (default 1e-4 * sigma2)");
  app.add_option("--f-cross", cfg.f_cross, "per-axis frequency bound of the cross-covariance")->capture_default_str();
  app.add_option("--f-prior", cfg.f_prior, "per-axis frequency bound of prior draws")->capture_default_str();
  app.add_option("--amortize-grid", cfg.amortize_grid, "amortization nodes per axis, 0 = off")->capture_default_str();
  app.add_option("--amortize-table", cfg.amortize_table, "load a saved amortization table")->check(CLI::ExistingFile);
  app.add_option("--solver", cfg.solver, "exact or sgd")->capture_default_str();
  app.add_option("--sgd-iters", cfg.sgd_iters, "SGD iteration budget")->capture_default_str();
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_option("--out", cfg.out, "output directory or file")->capture_default_str();
  app.add_option("--margin", cfg.margin, "torus margin around the data")->capture_default_str();
  app.add_option("--grid", cfg.grid, "contouring grid nodes per axis")->capture_default_str();
  app.add_flag("--torus-coords", cfg.torus_coords, "read and write torus coordinates instead of raw ones");

  auto* reconstruct = app.add_subcommand("reconstruct", "posterior mean field and its zero-level mesh");
  auto* sample = app.add_subcommand("sample", "fields and meshes of posterior samples");
  sample->add_option("--n-samples", cfg.n_samples, "number of samples")->capture_default_str();
  auto* query = app.add_subcommand("query", "probabilistic queries, JSON output");
  query->add_option("--kind", cfg.kind, "occupancy | collision | transmittance | total-uncertainty")->required();
  query->add_option("--geometry", cfg.geometry, "probes (x y z per line), rays, or box corners")
      ->check(CLI::ExistingFile);
  query->add_option("--n-samples", cfg.n_samples, "posterior samples")->capture_default_str();
  query->add_option("--mode", cfg.mode, "collision event: any or all")->capture_default_str();
  query->add_option("--n-points", cfg.n_points, "Monte Carlo points for total uncertainty")->capture_default_str();
  auto* hitbox = app.add_subcommand("hitbox", "mesh of the conservative hitbox level set");
  hitbox->add_option("--eta", cfg.eta, "standard deviations subtracted from the mean")->capture_default_str();
  auto* next_view = app.add_subcommand("next-view", "rank center rays by next-view score");
  next_view->add_option("--rays", cfg.rays, "rays: ox oy oz dx dy dz t_max step per line")->check(CLI::ExistingFile);
  next_view->add_option("--eps", cfg.eps, "transmittance threshold")->capture_default_str();
  next_view->add_option("--n-samples", cfg.n_samples, "posterior samples")->capture_default_str();
  auto* bench = app.add_subcommand("bench", "timing and accuracy sweeps, CSV output");
  bench->add_option("--sweep", cfg.sweep, "output-size | lengthscale | amortization")->capture_default_str();
  for (auto* sub : {reconstruct, sample, query, hitbox, next_view, bench}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    const bool needs_input = !bench->parsed() || cfg.sweep != "amortization";
    if (needs_input && cfg.input.empty()) throw ConfigError("--input is required");
    if (reconstruct->parsed()) return cmd_reconstruct(cfg);
    if (sample->parsed()) return cmd_sample(cfg);
    if (query->parsed()) return cmd_query(cfg);
    if (hitbox->parsed()) return cmd_hitbox(cfg);
    if (next_view->parsed()) return cmd_next_view(cfg);
    return cmd_bench(cfg);
  } catch (const Error& e) {
    err << "torusrecon: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const nlohmann::json::exception& e) {
    err << "torusrecon: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::bad_alloc&) {
    err << "torusrecon: out of memory\n";
    return kExitNumerical;
  }
}

}  // namespace torusrecon

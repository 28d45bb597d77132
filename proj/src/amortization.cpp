#include "torusrecon/amortization.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "hp_json.hpp"
#include "torusrecon/errors.hpp"

namespace torusrecon {

namespace {

constexpr int kBins = 4096;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<double> warped_positions(int grid_n) {
  std::vector<double> t;
  const double denom = grid_n - 1;
  for (int j = 0; j < grid_n; ++j) {
    const double u = static_cast<double>(2 * j - (grid_n - 1)) / denom;
    t.push_back(0.5 * u * u * u * u * u);
  }
  if (grid_n % 2 == 0) t.push_back(0.0);
  std::sort(t.begin(), t.end());
  return t;
}

double wrap_lag(double offset) { return offset - std::floor(offset + 0.5); }

}  // namespace

AmortizationTable::AmortizationTable(Hyperparameters hp, int grid_n, int frequency_bound)
    : hp_(std::move(hp)), grid_n_(grid_n), frequency_bound_(frequency_bound) {
  if (grid_n < 2) throw InputError("amortization grid needs at least 2 points per axis");
  positions_ = warped_positions(grid_n);
  const int last = static_cast<int>(positions_.size()) - 2;
  bin_start_.resize(kBins);
  int j = 0;
  for (int b = 0; b < kBins; ++b) {
    const double start = static_cast<double>(b) / kBins - 0.5;
    while (j < last && positions_[static_cast<std::size_t>(j + 1)] <= start) ++j;
    bin_start_[static_cast<std::size_t>(b)] = j;
  }
}

std::size_t AmortizationTable::node_count() const noexcept {
  std::size_t count = 1;
  for (int a = 0; a < dim(); ++a) count *= positions_.size() - 1;
  return count;
}

AmortizationTable AmortizationTable::build(const SpectralSeries& cross, int grid_n) {
  if (!cross.frequencies().excludes_zero()) {
    throw InputError("cross-covariance series must exclude n = 0");
  }
  AmortizationTable table(cross.hyperparameters(), grid_n, cross.frequencies().bound());
  const int d = table.dim();
  const auto nodes = table.axis_nodes();
  const auto per_axis = static_cast<Eigen::Index>(nodes.size());
  table.values_.assign(table.node_count() * static_cast<std::size_t>(d), 0.0);

  if (d != 3) {
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> offset(static_cast<std::size_t>(d));
    std::vector<double> zero(static_cast<std::size_t>(d), 0.0);
    for (std::size_t node = 0; node < table.node_count(); ++node) {
      std::size_t rest = node;
      for (int a = 0; a < d; ++a) {
        offset[static_cast<std::size_t>(a)] = nodes[rest % nodes.size()];
        rest /= nodes.size();
      }
      cross.cross_covariance(offset, zero,
                             std::span<double>(table.values_.data() + node * static_cast<std::size_t>(d),
                                               static_cast<std::size_t>(d)));
    }
    return table;
  }

  // Three dimensions: sin(θ1+θ2+θ3) = s1c2c3 + c1s2c3 + c1c2s3 − s1s2s3, so the
  // lattice values are four separable mode products of the coefficient tensor.
  const int bound = cross.frequencies().bound();
  const Eigen::Index p = 2 * bound + 1;
  RowMatrix cosm(per_axis, p);
  RowMatrix sinm(per_axis, p);
  for (Eigen::Index j = 0; j < per_axis; ++j) {
    for (Eigen::Index m = 0; m < p; ++m) {
      const double theta = kTwoPi * static_cast<double>(m - bound) * nodes[static_cast<std::size_t>(j)];
      cosm(j, m) = std::cos(theta);
      sinm(j, m) = std::sin(theta);
    }
  }
  const std::size_t zero_pos = (cross.frequencies().full_size() - 1) / 2;
  RowMatrix coeff(p, p * p);
  RowMatrix step1(per_axis, p * p);
  RowMatrix slice(per_axis, p);
  RowMatrix block(per_axis, per_axis);
  for (int i = 0; i < d; ++i) {
    const auto w = cross.cross_weights(i);
    double* c = coeff.data();
    for (std::size_t flat = 0; flat < cross.frequencies().full_size(); ++flat) {
      if (flat == zero_pos) {
        c[flat] = 0.0;
      } else {
        c[flat] = w[flat < zero_pos ? flat : flat - 1];
      }
    }
    struct Term {
      const RowMatrix* x1;
      const RowMatrix* x2;
      const RowMatrix* x3;
      double sign;
    };
    const Term terms[] = {{&sinm, &cosm, &cosm, 1.0},
                          {&cosm, &sinm, &cosm, 1.0},
                          {&cosm, &cosm, &sinm, 1.0},
                          {&sinm, &sinm, &sinm, -1.0}};
    for (const auto& term : terms) {
      step1.noalias() = (*term.x1) * coeff;
      for (Eigen::Index j1 = 0; j1 < per_axis; ++j1) {
        Eigen::Map<const RowMatrix> u(step1.data() + j1 * p * p, p, p);
        slice.noalias() = (*term.x2) * u;
        block.noalias() = slice * term.x3->transpose();
        for (Eigen::Index j2 = 0; j2 < per_axis; ++j2) {
          for (Eigen::Index j3 = 0; j3 < per_axis; ++j3) {
            const auto node = static_cast<std::size_t>(j1 + per_axis * (j2 + per_axis * j3));
            table.values_[node * 3 + static_cast<std::size_t>(i)] += term.sign * block(j2, j3);
          }
        }
      }
    }
  }
  return table;
}

AmortizationTable::Cell AmortizationTable::locate(double offset) const {
  const int distinct = static_cast<int>(positions_.size()) - 1;
  int b = static_cast<int>((offset + 0.5) * kBins);
  b = std::clamp(b, 0, kBins - 1);
  int j = bin_start_[static_cast<std::size_t>(b)];
  while (j + 1 < distinct && positions_[static_cast<std::size_t>(j + 1)] <= offset) ++j;
  const double lo = positions_[static_cast<std::size_t>(j)];
  const double hi = positions_[static_cast<std::size_t>(j + 1)];
  return {j, j + 1 == distinct ? 0 : j + 1, (offset - lo) / (hi - lo)};
}

double AmortizationTable::node_value(std::span<const int> node, int component) const {
  if (node.size() != static_cast<std::size_t>(dim())) throw InputError("node dimension mismatch");
  if (component < 0 || component >= components()) throw InputError("component index out of range");
  const std::size_t per_axis = positions_.size() - 1;
  std::size_t flat = 0;
  for (int a = dim() - 1; a >= 0; --a) {
    const int j = node[static_cast<std::size_t>(a)];
    if (j < 0 || static_cast<std::size_t>(j) >= per_axis) throw InputError("node index out of range");
    flat = flat * per_axis + static_cast<std::size_t>(j);
  }
  return values_[flat * static_cast<std::size_t>(dim()) + static_cast<std::size_t>(component)];
}

void AmortizationTable::lookup_all(std::span<const double> offset, std::span<double> out) const {
  const int d = dim();
  if (offset.size() != static_cast<std::size_t>(d)) throw InputError("offset dimension mismatch");
  std::array<Cell, kMaxDim> cells{};
  for (int a = 0; a < d; ++a) cells[static_cast<std::size_t>(a)] = locate(wrap_lag(offset[static_cast<std::size_t>(a)]));
  const std::size_t per_axis = positions_.size() - 1;
  for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = 0.0;
  for (unsigned corner = 0; corner < (1u << d); ++corner) {
    double weight = 1.0;
    std::size_t flat = 0;
    for (int a = d - 1; a >= 0; --a) {
      const auto& cell = cells[static_cast<std::size_t>(a)];
      const bool upper = (corner >> a) & 1u;
      weight *= upper ? cell.w : 1.0 - cell.w;
      flat = flat * per_axis + static_cast<std::size_t>(upper ? cell.hi : cell.lo);
    }
    const double* v = values_.data() + flat * static_cast<std::size_t>(d);
    for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] += weight * v[i];
  }
}

double AmortizationTable::lookup(int component, std::span<const double> x,
                                 std::span<const double> x_prime) const {
  if (component < 0 || component >= components()) throw InputError("component index out of range");
  if (x.size() != x_prime.size()) throw InputError("point dimensions differ");
  std::array<double, kMaxDim> offset{};
  std::array<double, kMaxDim> out{};
  for (std::size_t a = 0; a < x.size(); ++a) offset[a] = x[a] - x_prime[a];
  lookup_all(std::span<const double>(offset.data(), x.size()), std::span<double>(out.data(), x.size()));
  return out[static_cast<std::size_t>(component)];
}

double AmortizationTable::weighted_lookup3(const double* offset, const double* weights) const {
  const Cell cx = locate(wrap_lag(offset[0]));
  const Cell cy = locate(wrap_lag(offset[1]));
  const Cell cz = locate(wrap_lag(offset[2]));
  const std::size_t n = positions_.size() - 1;
  const double* v = values_.data();
  const std::size_t xs[2] = {static_cast<std::size_t>(cx.lo), static_cast<std::size_t>(cx.hi)};
  const std::size_t ys[2] = {static_cast<std::size_t>(cy.lo) * n, static_cast<std::size_t>(cy.hi) * n};
  const std::size_t zs[2] = {static_cast<std::size_t>(cz.lo) * n * n, static_cast<std::size_t>(cz.hi) * n * n};
  const double wx[2] = {1.0 - cx.w, cx.w};
  const double wy[2] = {1.0 - cy.w, cy.w};
  const double wz[2] = {1.0 - cz.w, cz.w};
  double total = 0.0;
  for (int z = 0; z < 2; ++z) {
    for (int y = 0; y < 2; ++y) {
      const double wyz = wy[y] * wz[z];
      for (int x = 0; x < 2; ++x) {
        const double* node = v + (xs[x] + ys[y] + zs[z]) * 3;
        total += wx[x] * wyz * (weights[0] * node[0] + weights[1] * node[1] + weights[2] * node[2]);
      }
    }
  }
  return total;
}

void AmortizationTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  nlohmann::json header = {{"format", "torusrecon.amortization"},
                           {"version", 1},
                           {"hyperparameters", detail::to_json(hp_)},
                           {"grid_n", grid_n_},
                           {"frequency_bound", frequency_bound_},
                           {"components", components()},
                           {"nodes_per_axis", positions_.size() - 1},
                           {"endianness", "little"},
                           {"dtype", "float32"}};
  out << header.dump() << '\n';
  for (double value : values_) detail::write_f32_le(out, value);
  if (!out) throw IoError("failed writing " + path.string());
}

AmortizationTable AmortizationTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing amortization header", 0);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid amortization header: ") + e.what(), e.byte);
  }
  if (header.value("format", "") != "torusrecon.amortization" ||
      header.value("endianness", "") != "little") {
    throw FormatError("not a little-endian amortization table: " + path.string());
  }
  AmortizationTable table(detail::hyperparameters_from_json(header.at("hyperparameters")),
                          header.at("grid_n").get<int>(), header.at("frequency_bound").get<int>());
  table.hp_.validate();
  table.values_.resize(table.node_count() * static_cast<std::size_t>(table.dim()));
  for (std::size_t k = 0; k < table.values_.size(); ++k) {
    if (!detail::read_f32_le(in, table.values_[k])) {
      throw ParseError("truncated amortization payload", line.size() + 1 + 4 * k);
    }
  }
  return table;
}

double cross_covariance_amortized(const AmortizationTable& table, int component,
                                  std::span<const double> x, std::span<const double> x_prime) {
  return table.lookup(component, x, x_prime);
}

}  // namespace torusrecon

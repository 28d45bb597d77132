#include "torusrecon/frequency_set.hpp"

#include <cmath>
#include <numbers>

#include "torusrecon/errors.hpp"

namespace torusrecon {

FrequencySet::FrequencySet(int bound, int dim, bool exclude_zero)
    : bound_(bound), dim_(dim), exclude_zero_(exclude_zero), full_size_(1) {
  if (bound < 0) throw InputError("frequency bound must be >= 0");
  if (dim < 1 || dim > kMaxDim) throw InputError("dimension must be in [1, 8]");
  for (int a = 0; a < dim; ++a) full_size_ *= static_cast<std::size_t>(axis_count());
}

void FrequencySet::frequency(std::size_t k, std::span<int> n) const {
  std::size_t flat = k;
  if (exclude_zero_ && flat >= (full_size_ - 1) / 2) ++flat;
  const auto p = static_cast<std::size_t>(axis_count());
  for (int a = dim_ - 1; a >= 0; --a) {
    n[static_cast<std::size_t>(a)] = static_cast<int>(flat % p) - bound_;
    flat /= p;
  }
}

std::vector<int> FrequencySet::frequency(std::size_t k) const {
  std::vector<int> n(static_cast<std::size_t>(dim_));
  frequency(k, n);
  return n;
}

std::optional<std::size_t> FrequencySet::position(std::span<const int> n) const {
  if (n.size() != static_cast<std::size_t>(dim_)) return std::nullopt;
  std::size_t flat = 0;
  bool zero = true;
  for (int m : n) {
    if (m < -bound_ || m > bound_) return std::nullopt;
    flat = flat * static_cast<std::size_t>(axis_count()) + static_cast<std::size_t>(m + bound_);
    zero = zero && m == 0;
  }
  if (!exclude_zero_) return flat;
  if (zero) return std::nullopt;
  return flat > (full_size_ - 1) / 2 ? flat - 1 : flat;
}

FrequencySet build_frequency_set(int bound, int dim, bool exclude_zero) {
  return FrequencySet(bound, dim, exclude_zero);
}

AxisPhases::AxisPhases(int bound, std::span<const double> x)
    : stride_(static_cast<std::size_t>(2 * bound + 1)),
      cos_(stride_ * x.size()),
      sin_(stride_ * x.size()) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (std::size_t a = 0; a < x.size(); ++a) {
    // Reduce first so large coordinates do not lose phase accuracy.
    const double xr = x[a] - std::floor(x[a]);
    for (int m = -bound; m <= bound; ++m) {
      const double theta = kTwoPi * static_cast<double>(m) * xr;
      const std::size_t idx = a * stride_ + static_cast<std::size_t>(m + bound);
      cos_[idx] = std::cos(theta);
      sin_[idx] = std::sin(theta);
    }
  }
}

}  // namespace torusrecon

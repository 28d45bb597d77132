#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace torusrecon {

inline constexpr int kMaxDim = 8;

/// Truncated set of integer frequency vectors n with |n_a| <= bound, in
/// lexicographic order (first axis slowest). Optionally omits n = 0.
class FrequencySet {
 public:
  FrequencySet(int bound, int dim, bool exclude_zero);

  [[nodiscard]] int bound() const noexcept { return bound_; }
  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] bool excludes_zero() const noexcept { return exclude_zero_; }
  [[nodiscard]] int axis_count() const noexcept { return 2 * bound_ + 1; }
  [[nodiscard]] std::size_t full_size() const noexcept { return full_size_; }
  [[nodiscard]] std::size_t size() const noexcept {
    return exclude_zero_ ? full_size_ - 1 : full_size_;
  }

  /// Frequency vector stored at position k.
  void frequency(std::size_t k, std::span<int> n) const;
  [[nodiscard]] std::vector<int> frequency(std::size_t k) const;

  /// Position of n, or nullopt when n is outside the set.
  [[nodiscard]] std::optional<std::size_t> position(std::span<const int> n) const;

  bool operator==(const FrequencySet&) const = default;

 private:
  int bound_;
  int dim_;
  bool exclude_zero_;
  std::size_t full_size_;
};

FrequencySet build_frequency_set(int bound, int dim, bool exclude_zero);

/// cos/sin(2π m x_a) for m in [-F, F] on every axis of one point.
class AxisPhases {
 public:
  AxisPhases(int bound, std::span<const double> x);

  [[nodiscard]] const double* cos(int axis) const { return &cos_[static_cast<std::size_t>(axis) * stride_]; }
  [[nodiscard]] const double* sin(int axis) const { return &sin_[static_cast<std::size_t>(axis) * stride_]; }

 private:
  std::size_t stride_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

/// Calls visit(k, cos θ, sin θ) with θ = 2π⟨n_k, x⟩ for every stored frequency,
/// in storage order. Angle sums are formed from per-axis phases, no trig per mode.
template <class Visit>
void for_each_mode(const FrequencySet& fs, const AxisPhases& ph, Visit&& visit) {
  const int d = fs.dim();
  const int count = fs.axis_count();
  const int centre = fs.bound();
  const bool skip_zero = fs.excludes_zero();
  std::array<int, kMaxDim> digits{};  // outer axes 0..d-2
  const double* ca = ph.cos(d - 1);
  const double* sa = ph.sin(d - 1);
  std::size_t k = 0;
  while (true) {
    double pc = 1.0;
    double ps = 0.0;
    bool outer_zero = true;
    for (int a = 0; a + 1 < d; ++a) {
      const int m = digits[static_cast<std::size_t>(a)];
      const double c = ph.cos(a)[m];
      const double s = ph.sin(a)[m];
      const double nc = pc * c - ps * s;
      ps = ps * c + pc * s;
      pc = nc;
      outer_zero = outer_zero && (m == centre);
    }
    if (skip_zero && outer_zero) {
      for (int m = 0; m < count; ++m) {
        if (m == centre) continue;
        visit(k++, pc * ca[m] - ps * sa[m], ps * ca[m] + pc * sa[m]);
      }
    } else {
      for (int m = 0; m < count; ++m) {
        visit(k++, pc * ca[m] - ps * sa[m], ps * ca[m] + pc * sa[m]);
      }
    }
    int a = d - 2;
    for (; a >= 0; --a) {
      auto& digit = digits[static_cast<std::size_t>(a)];
      if (++digit < count) break;
      digit = 0;
    }
    if (a < 0) break;
  }
}

/// Kahan-compensated accumulator; series are summed in storage order.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  [[nodiscard]] double value() const { return sum; }
};

}  // namespace torusrecon

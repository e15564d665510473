#pragma once

#include <cstddef>
#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>

namespace poischaos {

inline constexpr const char* kVersion = "0.1.0";

// Thrown when a size/budget guard trips (as opposed to invalid input).
// The CLI maps std::invalid_argument to exit code 2 and guard_error to 3.
struct guard_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Default comparison tolerance: absolute plus relative, both 1e-9 unless a
// caller overrides them.
inline bool close(double a, double b, double abs_tol = 1e-9,
                  double rel_tol = 1e-9) {
  const double diff = std::fabs(a - b);
  if (diff <= abs_tol) return true;
  const double scale = std::fmax(std::fabs(a), std::fabs(b));
  return diff <= rel_tol * scale;
}

// n^p with overflow check, for tensor sizes.
inline std::size_t pow_size(std::size_t n, int p) {
  std::size_t r = 1;
  for (int i = 0; i < p; ++i) {
    if (n != 0 && r > SIZE_MAX / n) throw guard_error("tensor size overflows");
    r *= n;
  }
  return r;
}

std::uint64_t factorial(int n);
std::uint64_t binomial(int n, int k);  // 0 outside 0 <= k <= n

}  // namespace poischaos

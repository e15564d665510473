#pragma once

#include <memory>
#include <string>
#include <vector>

#include "poischaos/common.hpp"

namespace poischaos {

// A finite measure space: m cells with strictly positive weights (cell
// masses). All integrals below are weighted sums over cells, so the weights
// are data, not metadata; refining a grid means building a new space.
struct DiscreteSpace {
  std::vector<double> weights;
  std::vector<std::string> labels;  // optional; empty or one per cell

  std::size_t size() const { return weights.size(); }

  static std::shared_ptr<const DiscreteSpace> create(
      std::vector<double> weights, std::vector<std::string> labels = {});
};

using SpacePtr = std::shared_ptr<const DiscreteSpace>;

bool same_space(const SpacePtr& a, const SpacePtr& b);

// Dense order-p tensor over a space: values has length m^p, row-major with
// the first index slowest. Order 0 is a scalar (values has length 1).
class Kernel {
 public:
  Kernel(SpacePtr space, int order, std::vector<double> values,
         bool symmetric = false);

  static Kernel zero(SpacePtr space, int order);
  static Kernel constant(SpacePtr space, double value);
  static Kernel ones(SpacePtr space, int order);

  const SpacePtr& space() const { return space_; }
  int order() const { return order_; }
  std::size_t cell_count() const { return space_->size(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  bool symmetric() const { return symmetric_; }
  void set_symmetric(bool s) { symmetric_ = s; }

  double value_at(const std::vector<std::size_t>& idx) const;

 private:
  SpacePtr space_;
  int order_;
  std::vector<double> values_;
  bool symmetric_;
};

inline constexpr int kMaxKernelOrder = 6;

// Integral of f against the product measure: sum of f times the weight of
// each index tuple. For order 0 this is just the stored scalar.
double integrate(const Kernel& f);

// <f, g> = integral of f*g over the product measure. Orders and spaces must
// match.
double inner_product(const Kernel& f, const Kernel& g);

// (integral of |f|^e)^(1/e), e >= 1.
double lp_norm(const Kernel& f, double exponent);
double l2_norm(const Kernel& f);

// f(cell, ...): fixes the first argument, giving an order p-1 kernel.
Kernel slice(const Kernel& f, std::size_t cell);

// Exact check that the stored values are invariant under argument
// permutations (used on load and by tests; ops rely on the cached flag).
bool check_symmetric(const Kernel& f, double tol = 0.0);

// JSON file format with fields m, weights, order, values (row-major) and
// optional labels. Doubles survive a save/load round trip bit-exactly.
Kernel load_kernel(const std::string& path);
void save_kernel(const Kernel& f, const std::string& path);
Kernel parse_kernel(const std::string& json_text);
std::string serialize_kernel(const Kernel& f);

}  // namespace poischaos

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "poischaos/space.hpp"

namespace poischaos {

// F = mean + sum over k of the k-fold multiple integral of kernels[k-1].
// All kernels are symmetric and share one space. kernels[k-1] has order k;
// zero kernels are allowed as placeholders so orders are positional.
struct ChaosExpansion {
  SpacePtr space;
  double mean = 0.0;
  std::vector<Kernel> kernels;

  int max_order() const { return static_cast<int>(kernels.size()); }
  const Kernel& kernel(int k) const { return kernels[k - 1]; }
};

// Highest order accepted from user input (files, CLI). Internally produced
// expansions (products, pairings) may go up to the kernel order cap of 6.
inline constexpr int kMaxUserExpansionOrder = 4;

ChaosExpansion make_expansion(SpacePtr space, double mean,
                              std::vector<Kernel> kernels);

// One chaos expansion per cell; the value of an operator like the derivative
// at each point of the space.
struct DerivativeField {
  SpacePtr space;
  std::vector<ChaosExpansion> at_cell;
};

// Difference-operator derivative: (DF)(z) has order-(k-1) kernels
// k * f_k(z, .); the k = 1 kernel contributes f_1(z) to the constant.
DerivativeField derivative(const ChaosExpansion& F);

// Generator of the transition semigroup on expansions: kills the mean and
// multiplies the order-k kernel by -k.
ChaosExpansion ou_generator(const ChaosExpansion& F);

// Inverse of the generator on centered expansions: order-k kernel scaled by
// -1/k. Errors when mean != 0.
ChaosExpansion pseudo_inverse(const ChaosExpansion& F);

// Adjoint of the derivative: reassembles per-cell order-k kernels into one
// order-(k+1) kernel (cell argument first) and symmetrizes; per-cell
// constants become an order-1 kernel. The result is centered.
ChaosExpansion divergence(const DerivativeField& u);

// Full product F * G as an expansion: bilinear over term pairs through the
// orthogonal product decomposition. Resulting order must stay within the
// kernel cap.
ChaosExpansion expansion_product(const ChaosExpansion& F,
                                 const ChaosExpansion& G);

// Expansion of <DF, -D L^{-1} G> for centered F, G. For single terms
// I_p(f), I_q(g) this is p times the sum over k of the order-k projected
// product components; the k = 0 component p! <f, g> (present only when
// p = q) lands in the mean.
ChaosExpansion malliavin_inner(const ChaosExpansion& F,
                               const ChaosExpansion& G);

// E[F^2] = mean^2 + sum_k k! ||f_k||^2.
double second_moment(const ChaosExpansion& F);

// E[F G] = mean_F mean_G + sum_k k! <f_k, g_k> (orthogonality across
// orders).
double product_moment(const ChaosExpansion& F, const ChaosExpansion& G);

// Expansion arithmetic helpers.
ChaosExpansion expansion_zero(SpacePtr space);
void add_scaled_expansion(ChaosExpansion& acc, const ChaosExpansion& term,
                          double c);

// File format: {"mean": x, "kernel_files": [paths relative to the file]}.
// Kernel symmetry is validated on load; at most 4 kernels.
ChaosExpansion load_expansion(const std::string& path);
void save_expansion(const ChaosExpansion& F, const std::string& path,
                    const std::string& kernel_prefix);

}  // namespace poischaos

#pragma once

#include <utility>
#include <vector>

#include "poischaos/space.hpp"

namespace poischaos {

// Parameters of a star contraction between symmetric kernels of orders p and
// q: the first r arguments of both kernels are identified pairwise, and the
// first l of the identified pairs are integrated out. Valid when
// 0 <= l <= r <= min(p, q).
struct ContractionSpec {
  int p = 0, q = 0, r = 0, l = 0;
  bool valid() const;
  int result_order() const { return p + q - r - l; }
  std::string describe() const;
};

// Average of f over all argument permutations. Orders up to 6.
Kernel symmetrize(const Kernel& f);

// Star contraction. Both inputs must be symmetric (so "first arguments" is a
// convention, not a restriction) and live on the same space. The result has
// argument blocks (shared, remaining-from-f, remaining-from-g) and is NOT
// symmetrized.
Kernel star_contract(const Kernel& f, const Kernel& g, int r, int l);

// Squared L2 norm of f *_t^s g computed two independent ways, for
// 1 <= s <= t <= min(p, q):
//   first  = ||f *_t^s g||^2 over the (p+q-t-s)-fold product measure,
//   second = <f *_{p-s}^{p-t} f, g *_{q-s}^{q-t} g> over the (t+s)-fold one.
// The two agree analytically; returning both makes the identity testable.
std::pair<double, double> contraction_identity(const Kernel& f,
                                               const Kernel& g, int s, int t);

// Integral of (f *_r^0 g)^2 computed directly and via the nested-contraction
// rearrangement <f *_p^{p-r} f, g *_q^{q-r} g>, for 1 <= r <= min(p, q).
std::pair<double, double> useful_identity(const Kernel& f, const Kernel& g,
                                          int r);

// Order-k component of the product of two multiple integrals: the weighted
// sum of symmetrized contractions sym(f *_r^l g) over all (r, l) with
// p + q - r - l = k, coefficient r! C(p,r) C(q,r) C(r,l). Requires
// |q - p| <= k <= p + q.
Kernel g_operator(const Kernel& f, const Kernel& g, int k);

// Order-k component of the projected product <D I_p(f), -D L^{-1} I_q(g)>
// before the leading factor p. Two evaluation routes:
//   g_hat_slice_sum: integrate g_operator of the cell slices over the space
//     (reference route, used as the oracle in tests);
//   g_hat_operator: closed form, the weighted sum of sym(f *_t^s g) over
//     t in [1, min(p,q)], s = p + q - k - t restricted to [1, t], with
//     coefficient (t-1)! C(p-1,t-1) C(q-1,t-1) C(t-1,s-1).
// Requires p, q >= 1 and |q - p| <= k <= p + q - 2; k = 0 only when p = q
// (the result is then the order-0 kernel (p-1)! <f, g>).
Kernel g_hat_operator(const Kernel& f, const Kernel& g, int k);
Kernel g_hat_slice_sum(const Kernel& f, const Kernel& g, int k);

// Norm control for the order-k projected-product component:
//   first  = ||ghat_k(f, g)||^2,
//   second = c * sum_t ||sym(f *_t^{s(t,k)} g)||^2 over admissible t,
// where s(t,k) = p + q - k - t and c is the squared-coefficient sum
// sum_t [(t-1)! C(p-1,t-1) C(q-1,t-1) C(t-1,s(t,k)-1)]^2. Analytically
// first <= second.
std::pair<double, double> g_hat_norm_bound(const Kernel& f, const Kernel& g,
                                           int k);

// ||f *_r^l g|| over the product measure. Routed through the nested
// rearrangement <f *_{p-l}^{p-r} f, g *_{q-l}^{q-r} g> (or its l = 0
// variant) whenever the direct result tensor would be too large, so norms
// of high-order contractions never materialize them.
double star_norm(const Kernel& f, const Kernel& g, int r, int l);

// Full expansion of I_p(f) I_q(g) into orthogonal components: pairs (k, G_k)
// for k = |q - p| .. p + q.
std::vector<std::pair<int, Kernel>> product_expand(const Kernel& f,
                                                   const Kernel& g);

// Diagnostics for the square-integrability conditions used by the bound
// assembly. On a finite space everything is finite; the reports carry the
// actual magnitudes so callers can see how close to degenerate a kernel is.
struct ContractionNormReport {
  bool ok = true;
  std::vector<double> nested_self_norms;  // ||f *_p^{p-r} f||, r = 1..p
  double l4_norm = 0.0;
};
ContractionNormReport assumption_a_check(const Kernel& f);

struct AbsContractionEntry {
  int r, l;
  double max_abs;  // largest entry of |f| *_r^l |f|
};
std::vector<AbsContractionEntry> assumption_b_check(const Kernel& f);

// Integrability proxy for exchanging the cell integral with the expansion:
// sum over cells z of w(z) * || G_k(f(z,.), g(z,.)) ||_{L2}.
double assumption_c_value(const Kernel& f, const Kernel& g, int k);

}  // namespace poischaos

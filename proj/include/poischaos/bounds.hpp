#pragma once

#include <vector>

#include "poischaos/space.hpp"

namespace poischaos {

// Small dense symmetric matrix, row-major. Dimensions stay tiny (target
// covariances), so everything below is written for clarity over speed.
struct SymMatrix {
  int dim = 0;
  std::vector<double> a;

  double at(int i, int j) const { return a[i * dim + j]; }
  double& at(int i, int j) { return a[i * dim + j]; }
};

inline constexpr int kMaxMatrixDim = 16;

// Validates the dimension cap and symmetry (within 1e-12 relative to the
// largest entry).
SymMatrix make_sym_matrix(int dim, std::vector<double> values);

// Eigenvalues in ascending order, by cyclic Jacobi rotations.
std::vector<double> jacobi_eigenvalues(const SymMatrix& M);

double op_norm(const SymMatrix& M);  // largest |eigenvalue|
double hs_norm(const SymMatrix& M);
double hs_distance(const SymMatrix& A, const SymMatrix& B);

// Nonnegative definite: smallest eigenvalue >= -1e-10. Positive definite:
// smallest eigenvalue > 1e-10 * op_norm.
bool is_nonneg_definite(const SymMatrix& M);
bool is_pos_definite(const SymMatrix& M);

// Multipliers in front of the two halves of the normal-approximation
// bounds: total = quad * sqrt(sum of squared pairing gaps) + cubic *
// (third-order integral term).
struct SteinConstants {
  double quad = 0.0;
  double cubic = 0.0;
};

// Constants for the C^2 test-function distance; requires positive definite
// C: quad = ||C^-1||op ||C||op^(1/2), cubic = (sqrt(2 pi)/8) ||C^-1||op^(3/2)
// ||C||op.
SteinConstants d2_constants(const SymMatrix& C);

// Constants for the C^3 distance: (1/2, 1/4) for any nonnegative definite
// target.
SteinConstants d3_constants(const SymMatrix& C);

// Upper bounds on E[(target - <D I_p(f), -D L^{-1} I_q(g)>)^2], tightest
// first:
//   exact       the orthogonal-component sum, computed in full;
//   contraction each component norm replaced by its symmetrized-contraction
//               bound;
//   nested      each contraction norm replaced by the product of nested
//               self-contraction norms.
// exact <= contraction <= nested holds term by term.
struct PairTermBounds {
  double exact = 0.0;
  double contraction = 0.0;
  double nested = 0.0;
};
PairTermBounds pair_term_bounds(const Kernel& f, const Kernel& g,
                                double target);

// Upper bound on the third-order integral term for a vector of single-order
// functionals I_{q_i}(f_i), via self-contraction norms of each kernel.
double third_moment_term(const std::vector<Kernel>& fs);

// The same integral evaluated exactly when every functional has order 1:
// sum over cells of w(z) (sum_i |h_i(z)|)^3.
double first_chaos_cubic_exact(const std::vector<Kernel>& hs);

// Assembled bound for a vector of single-order functionals against a
// Gaussian with covariance C. level picks the pairing-gap route: 1 exact,
// 2 contraction, 3 nested.
struct DistanceBound {
  double pairing_gap_sum = 0.0;  // sum of squared-gap bounds over pairs
  double cubic_term = 0.0;       // third-order integral bound
  double d3 = 0.0;
  double d2 = 0.0;
  bool d2_valid = false;  // requires positive definite C
};
DistanceBound chaos_vector_bound(const std::vector<Kernel>& fs,
                                 const SymMatrix& C, int level);

// Specialized assembly for a vector of order-1 functionals: the pairing
// gaps collapse to the covariance mismatch ||C - K||_HS with
// K(i,j) = <h_i, h_j>, and the cubic term is exact.
struct FirstChaosBound {
  double hs_gap = 0.0;
  double cubic = 0.0;
  double d3 = 0.0;
  double d2 = 0.0;
  bool d2_valid = false;
};
FirstChaosBound first_chaos_bound(const std::vector<Kernel>& hs,
                                  const SymMatrix& C);

// Bound for a vector with m order-1 coordinates followed by n order-2
// coordinates, assembled two ways: with cross-kernel contraction norms
// (tighter) and with self-contraction products only.
struct SingleDoubleBound {
  double s1 = 0.0;  // order-1 block covariance gaps
  double s2 = 0.0;  // order-2 block: gaps plus cross contractions
  double s3 = 0.0;  // mixed block, cross contractions
  double s4 = 0.0;  // third-order term
  double s5 = 0.0;  // order-2 block via self-contractions
  double s6 = 0.0;  // mixed block via self-contractions
  double d3_contraction = 0.0;  // (1/2) sqrt(s1+s2+s3) + s4
  double d3_nested = 0.0;       // (1/2) sqrt(s1+s5+s6) + s4
};
SingleDoubleBound single_double_bound(const std::vector<Kernel>& gs,
                                      const std::vector<Kernel>& hs,
                                      const SymMatrix& C);

// Distance between two centered Gaussians through whichever covariance is
// positive definite: min over valid branches of ||A^-1||op ||A||op^(1/2)
// times ||C - K||_HS.
double gaussian_pair_bound(const SymMatrix& C, const SymMatrix& K);

// Convergence diagnostics for one single-order functional: every
// contraction norm that must vanish, plus the fourth moment of the kernel.
struct CltChecks {
  struct Entry {
    int r = 0, l = 0;
    double norm = 0.0;
  };
  std::vector<Entry> contraction_norms;  // r = 1..q, l = 1..min(r, q-1)
  double fourth_moment = 0.0;            // integral of f^4
};
CltChecks clt_checks(const Kernel& f);

// Matrix of q_i! <f_i, f_j> 1{q_i = q_j}: the covariance a converging
// sequence must stabilize to.
SymMatrix chaos_covariance(const std::vector<Kernel>& fs);

}  // namespace poischaos

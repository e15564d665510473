#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "poischaos/bounds.hpp"
#include "poischaos/space.hpp"

// Kernels and closed-form covariances for time-averaged functionals of a
// stationary Ornstein-Uhlenbeck process driven by compound Poisson noise:
// the normalized time average (case A), the normalized empirical second
// moment (case Q), and its lagged variant (case Qh). The driving noise
// marks form a discrete distribution scaled to unit second moment.
namespace poischaos::oulevy {

struct MarkAtom {
  double value = 0.0;
  double mass = 0.0;
};

struct OUConfig {
  std::vector<double> lambdas;  // mean-reversion rates, one per coordinate
  double T = 100.0;             // averaging horizon
  double h = 0.0;               // lag for the Qh case
  double x_min = -20.0;         // left truncation of the time axis
  std::size_t nx = 0;           // grid cells along the time axis
  std::vector<MarkAtom> atoms;  // mark distribution (normalized on use)
  std::uint64_t seed = 0x5EED;
  std::size_t reps = 10000;

  // Fourth moment of the normalized marks.
  double cnu2() const;

  // Symmetric two-point marks, x_min = -20 / min(lambda) (truncated mass
  // below 1e-17), and nx cells at the given per-unit-time resolution.
  static OUConfig standard(std::vector<double> lambdas, double T,
                           double points_per_unit = 4.0);
};

// Marks normalized to total mass 1 and unit second moment.
std::vector<MarkAtom> normalized_atoms(const OUConfig& cfg);

// Cells are (x-interval, mark) pairs: cell = ix * natoms + ia, with weight
// mass(atom) * dx and midpoint coordinates stored per cell.
struct OUGrid {
  SpacePtr space;
  std::vector<double> x_mid;
  std::vector<double> u_val;
  double dx = 0.0;
  std::size_t nx = 0;
  std::size_t natoms = 0;
};

OUGrid build_grid(const OUConfig& cfg);

// Scalar x-parts of the kernels (mark factors u, u' and the sqrt(T) scale
// excluded). All exponents are nonpositive, so values stay in [0, 1]-ish
// ranges for any T.
double a_formula(double lambda, double T, double x);
double q_mean_formula(double lambda, double T, double x);
double q_quad_formula(double lambda, double T, double x, double xp);
double qh_mean_formula(double lambda, double T, double h, double x);
double qh_quad_formula(double lambda, double T, double h, double x,
                       double xp);

// Order-1 kernel of the normalized time average.
Kernel kernel_A(const OUGrid& grid, double lambda, double T);

// The empirical-second-moment functional splits into an order-1 and an
// order-2 part; both returned kernels carry the sqrt(T) normalization.
std::pair<Kernel, Kernel> kernel_Q(const OUGrid& grid, double lambda,
                                   double T);

// Lagged variant. The raw order-2 integrand is not symmetric for h > 0 and
// is symmetrized here; at h = 0 both kernels reduce to kernel_Q.
std::pair<Kernel, Kernel> kernel_Qh(const OUGrid& grid, double lambda,
                                    double T, double h);

enum class Functional { A, Q, Qh };

// Closed-form finite-T covariance of coordinates i and j (for Q/Qh the sum
// of the order-1 and order-2 block entries). Never uses grid quadrature.
double cov_exact(const OUConfig& cfg, Functional which, int i, int j);

// The T -> infinity covariance matrix of the coordinate vector.
SymMatrix cov_limit(const OUConfig& cfg, Functional which);

// Covariances of the split vector (order-1 parts, then order-2 parts),
// 2d x 2d for Q/Qh with exact zeros off the blocks; for A the plain d x d.
SymMatrix block_cov_exact(const OUConfig& cfg, Functional which);
SymMatrix block_cov_limit(const OUConfig& cfg, Functional which);

// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(const std::vector<double>& xs,
                        const std::vector<double>& ys);

// Decay study for the empirical-second-moment kernels at one rate
// (cfg.lambdas[0], lag cfg.h): the five vanishing norms that drive the
// normal approximation, plus the assembled distance bound, on a grid whose
// resolution per unit time stays fixed as T grows.
struct RatePoint {
  double T = 0.0;
  std::size_t cells = 0;
  double mean_l3 = 0.0;     // ||order-1 kernel||_L3 cubed
  double quad_l4 = 0.0;     // ||order-2 kernel||_L4 squared
  double contract21 = 0.0;  // ||k2 *_2^1 k2||
  double contract11 = 0.0;  // ||k2 *_1^1 k2||
  double cross11 = 0.0;     // ||k1 *_1^1 k2||
  double d3 = 0.0;          // assembled bound against the limit covariance
};
struct RateTable {
  std::vector<RatePoint> points;
  double slope_mean_l3 = 0.0;
  double slope_quad_l4 = 0.0;
  double slope_contract21 = 0.0;
  double slope_contract11 = 0.0;
  double slope_cross11 = 0.0;
  double slope_d3 = 0.0;
};
RateTable rate_experiment(const OUConfig& base,
                          const std::vector<double>& t_grid,
                          double points_per_unit);

// One case assembled on one grid: kernels plus the matching split-vector
// covariance targets, ready for bounds and simulation.
struct DemoKit {
  OUGrid grid;
  std::vector<Kernel> order1;
  std::vector<Kernel> order2;  // empty for case A
  SymMatrix exact_cov;
  SymMatrix limit_cov;
};
DemoKit build_demo(const OUConfig& cfg, Functional which);

}  // namespace poischaos::oulevy

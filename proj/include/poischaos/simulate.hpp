#pragma once

#include <cstdint>
#include <vector>

#include "poischaos/chaos.hpp"
#include "poischaos/space.hpp"

namespace poischaos {

// Counter-based RNG (Philox4x32, 10 rounds). Every draw is a pure function
// of (seed, replication, cell, draw index), so the sampled field does not
// depend on evaluation order or worker count.
class CellRng {
 public:
  CellRng(std::uint64_t seed, std::uint64_t replication, std::uint32_t cell);

  std::uint64_t next_u64();
  // Uniform in the open interval (0, 1).
  double next_unit();
  // Standard normal via Box-Muller (two uniforms per call; no caching, so
  // the draw count stays predictable).
  double next_normal();

 private:
  std::uint32_t key_[2];
  std::uint32_t base_[3];  // cell, replication low, replication high
  std::uint32_t draw_ = 0;
  std::uint32_t buf_[4];
  int buf_pos_ = 4;  // consumed
  void refill();
};

// Poisson sampler: Knuth's product method for small means, Hormann's
// transformed-rejection (PTRD) above the cutover. Draw counts vary per
// sample, which is why each (rep, cell) pair gets its own counter stream.
int sample_poisson(double mean, CellRng& rng);

// Occupation counts for `reps` independent fields: counts[rep * m + cell]
// is Poisson with mean weights[cell], all entries independent.
struct SampleBatch {
  SpacePtr space;
  std::size_t reps = 0;
  std::vector<std::int32_t> counts;

  std::int32_t count(std::size_t rep, std::size_t cell) const {
    return counts[rep * space->size() + cell];
  }
};

SampleBatch sample_counts(const SpacePtr& space, std::size_t reps,
                          std::uint64_t seed);

// Kernel with all entries on repeated-index tuples zeroed, plus the L2 mass
// that was removed. Pathwise evaluation represents multiple integrals
// exactly only for such kernels; on refining grids the removed mass is a
// mesh artifact that vanishes.
struct DiagFreeKernel {
  Kernel kernel;
  double removed_l2_mass = 0.0;
};
DiagFreeKernel diag_free_projection(const Kernel& f);

// Value of the p-fold multiple integral on one sampled field, where
// centered[cell] = count - weight. Computes the full multilinear sum, which
// equals the multiple integral precisely when f is diagonal-free.
double eval_multiple_integral(const Kernel& f,
                              const std::vector<double>& centered);

// Pathwise value of a chaos expansion on one field. Kernels are projected
// to their diagonal-free parts internally; use diag_free_projection to see
// what that projection removes.
double eval_chaos(const ChaosExpansion& F, const std::vector<double>& centered);

// Pathwise value of <DF, -D L^{-1} G> on one field: the cell integral of
// the two derivative values, each evaluated by the multiple-integral rule
// above. Means of F and G are ignored (derivatives kill constants).
double eval_malliavin_pairing(const ChaosExpansion& F, const ChaosExpansion& G,
                              const std::vector<double>& centered);

// Streaming Monte Carlo: per-replication values of each expansion. Counts
// are regenerated per replication from the counter RNG, so memory stays
// O(cells) per worker and the output is identical for every worker count.
// Kernels are diagonal-free projected once up front.
std::vector<std::vector<double>> simulate_expansions(
    const std::vector<ChaosExpansion>& Fs, std::size_t reps,
    std::uint64_t seed);

// Streaming per-replication values of <DF, -D L^{-1} G>.
std::vector<double> simulate_pairing(const ChaosExpansion& F,
                                     const ChaosExpansion& G,
                                     std::size_t reps, std::uint64_t seed);

// Mean with the usual standard error sd/sqrt(n).
struct MeanWithError {
  double value = 0.0;
  double std_error = 0.0;
};
MeanWithError mc_mean(const std::vector<double>& xs);

// Elementwise product of two per-replication series, as a mean with error;
// estimates E[XY] for testing second moments against exact values.
MeanWithError mc_product_mean(const std::vector<double>& xs,
                              const std::vector<double>& ys);

// Central moments of a sample: kurtosis is m4/m2^2 (3 for a Gaussian).
struct SampleStats {
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
};
SampleStats sample_stats(const std::vector<double>& xs);

// Smooth test functions x -> cos(<freq, x> + phase) with |freq| summing to
// 1, so all second and third partials are bounded by 1 and the observed
// expectation gaps are valid lower proxies for the smooth-function
// distances the bounds control.
struct TestFunction {
  std::vector<double> freq;
  double phase = 0.0;
};
std::vector<TestFunction> make_test_functions(int dim, int count,
                                              std::uint64_t seed);

// E[cos(<freq, X> + phase)] for X centered Gaussian with covariance cov
// (row-major dim x dim): cos(phase) * exp(-freq' cov freq / 2).
double gaussian_cos_moment(const TestFunction& tf,
                           const std::vector<double>& cov, int dim);

// Largest |empirical - Gaussian| expectation gap over a test-function
// family, with the Monte Carlo standard error of the winning gap.
struct DiscrepancyReport {
  double max_gap = 0.0;
  double max_gap_se = 0.0;
  int argmax = -1;
  std::vector<double> gaps;
  std::vector<double> std_errors;
};
DiscrepancyReport smooth_discrepancy(
    const std::vector<std::vector<double>>& values,
    const std::vector<TestFunction>& tfs, const std::vector<double>& cov);

}  // namespace poischaos

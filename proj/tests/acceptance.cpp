// Acceptance suite: one line per criterion, [PASS]/[FAIL], nonzero exit if
// anything fails. Tolerances and budgets are fixed here on purpose; loosening
// them is a contract change, not a tuning knob.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "poischaos/algebra.hpp"
#include "poischaos/bounds.hpp"
#include "poischaos/chaos.hpp"
#include "poischaos/oulevy.hpp"
#include "poischaos/parallel.hpp"
#include "poischaos/simulate.hpp"
#include "poischaos/space.hpp"

using namespace poischaos;
using oulevy::Functional;
using oulevy::OUConfig;

namespace {

bool g_all_ok = true;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", id, name,
              detail.c_str());
  std::fflush(stdout);
  g_all_ok = g_all_ok && ok;
}

std::string num(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.3g", x);
  return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

SpacePtr random_space(std::size_t m, std::mt19937& gen) {
  std::uniform_real_distribution<double> w(0.3, 2.0);
  std::vector<double> ws(m);
  for (double& x : ws) x = w(gen);
  return DiscreteSpace::create(ws);
}

Kernel random_symmetric(const SpacePtr& sp, int order, std::mt19937& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t n = 1;
  for (int i = 0; i < order; ++i) n *= sp->size();
  std::vector<double> v(n);
  for (double& x : v) x = u(gen);
  return symmetrize(Kernel(sp, order, std::move(v)));
}

ChaosExpansion single_term(const SpacePtr& sp, const Kernel& f) {
  std::vector<Kernel> ks;
  for (int k = 1; k <= f.order(); ++k) {
    ks.push_back(k == f.order() ? f : Kernel::zero(sp, k));
  }
  return make_expansion(sp, 0.0, ks);
}

double max_kernel_diff(const ChaosExpansion& a, const ChaosExpansion& b) {
  double worst = std::abs(a.mean - b.mean);
  const int hi = std::max(a.max_order(), b.max_order());
  for (int k = 1; k <= hi; ++k) {
    const Kernel ka =
        k <= a.max_order() ? a.kernel(k) : Kernel::zero(a.space, k);
    const Kernel kb =
        k <= b.max_order() ? b.kernel(k) : Kernel::zero(b.space, k);
    for (std::size_t i = 0; i < ka.values().size(); ++i) {
      worst = std::max(worst, std::abs(ka.values()[i] - kb.values()[i]));
    }
  }
  return worst;
}

std::string serialize_rows(const std::vector<std::vector<double>>& rows) {
  std::string s;
  char b[40];
  for (const auto& row : rows) {
    for (double x : row) {
      std::snprintf(b, sizeof b, "%.17g,", x);
      s += b;
    }
    s += '\n';
  }
  return s;
}

void criterion_1_and_2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 gen(101);
  double worst_identity = 0.0;
  double worst_dual = 0.0;
  double worst_slack = 0.0;  // most negative slack seen
  int pairs = 0;

  for (std::size_t m = 2; m <= 6; ++m) {
    for (int trial = 0; trial < 3; ++trial) {
      const SpacePtr sp = random_space(m, gen);
      for (int p = 1; p <= 3; ++p) {
        for (int q = 1; q <= 3; ++q) {
          const Kernel f = random_symmetric(sp, p, gen);
          const Kernel g = random_symmetric(sp, q, gen);
          ++pairs;
          const int cap = std::min(p, q);
          for (int t = 1; t <= cap; ++t) {
            for (int s = 1; s <= t; ++s) {
              const auto [lhs, rhs] = contraction_identity(f, g, s, t);
              worst_identity = std::max(worst_identity, std::abs(lhs - rhs));
            }
          }
          for (int r = 1; r <= cap; ++r) {
            const auto [lhs, rhs] = useful_identity(f, g, r);
            worst_identity = std::max(worst_identity, std::abs(lhs - rhs));
          }

          const int kmin = p == q ? 0 : std::abs(q - p);
          const int kmax = p + q - 2;
          for (int k = kmin; k <= kmax; ++k) {
            const Kernel closed = g_hat_operator(f, g, k);
            const Kernel sliced = g_hat_slice_sum(f, g, k);
            for (std::size_t i = 0; i < closed.values().size(); ++i) {
              worst_dual = std::max(
                  worst_dual,
                  std::abs(closed.values()[i] - sliced.values()[i]));
            }
            if (k >= 1) {
              const auto [normsq, bound] = g_hat_norm_bound(f, g, k);
              worst_slack = std::min(worst_slack, bound - normsq);
            }
          }
        }
      }
    }
  }

  const double elapsed = seconds_since(t0);
  report(1, "contraction norm identities",
         worst_identity <= 1e-10 && pairs >= 100 && elapsed < 10.0,
         "max |lhs-rhs| = " + num(worst_identity) + " over " +
             std::to_string(pairs) + " pairs, " + num(elapsed) + " s");
  report(2, "dual route and norm control for pairing components",
         worst_dual <= 1e-10 && worst_slack >= -1e-10,
         "max dual gap = " + num(worst_dual) +
             ", min bound slack = " + num(worst_slack));
}

void criterion_3() {
  std::mt19937 gen(303);
  const SpacePtr sp = random_space(3, gen);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Kernel> ks;
    const int K = 1 + trial % 3;
    for (int k = 1; k <= K; ++k) ks.push_back(random_symmetric(sp, k, gen));
    const ChaosExpansion F =
        make_expansion(sp, trial % 2 ? 0.8 : 0.0, ks);

    ChaosExpansion neg_l = ou_generator(F);
    for (Kernel& k : neg_l.kernels) {
      for (double& v : k.values()) v = -v;
    }
    worst = std::max(worst, max_kernel_diff(divergence(derivative(F)), neg_l));

    const ChaosExpansion centered = make_expansion(sp, 0.0, F.kernels);
    worst = std::max(
        worst, max_kernel_diff(ou_generator(pseudo_inverse(centered)),
                               centered));
  }
  report(3, "derivative, divergence, and generator algebra", worst <= 1e-12,
         "max kernel-entry gap = " + num(worst));
}

void criterion_4() {
  std::mt19937 gen(404);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const SpacePtr sp = DiscreteSpace::create({0.5, 1.0, 1.5, 0.75});

  std::vector<double> fv(16, 0.0), gv(16, 0.0);
  fv[1] = u(gen);
  fv[4] = fv[1];
  gv[2 * 4 + 3] = u(gen);
  gv[3 * 4 + 2] = gv[2 * 4 + 3];
  const Kernel f2(sp, 2, fv, true);
  const Kernel g2(sp, 2, gv, true);
  const Kernel f1(sp, 1, {u(gen), u(gen), 0.0, 0.0});
  const Kernel g1(sp, 1, {0.0, 0.0, u(gen), u(gen)});

  const SampleBatch batch = sample_counts(sp, 1000, 4040);
  double worst = 0.0;
  const std::vector<std::pair<const Kernel*, const Kernel*>> cases{
      {&f1, &g1}, {&f1, &g2}, {&f2, &g2}};
  for (const auto& [pf, pg] : cases) {
    const auto parts = product_expand(*pf, *pg);
    for (std::size_t rep = 0; rep < batch.reps; ++rep) {
      std::vector<double> c(sp->size());
      for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] = static_cast<double>(batch.count(rep, i)) - sp->weights[i];
      }
      const double lhs =
          eval_multiple_integral(*pf, c) * eval_multiple_integral(*pg, c);
      double rhs = 0.0;
      for (const auto& [k, kern] : parts) {
        rhs += k == 0 ? kern.values()[0]
                      : eval_multiple_integral(
                            diag_free_projection(kern).kernel, c);
      }
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  report(4, "pathwise product identity", worst <= 1e-8,
         "max per-replication residual = " + num(worst));
}

void criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 gen(505);
  const SpacePtr sp = random_space(3, gen);
  std::vector<Kernel> fs;
  std::vector<ChaosExpansion> Fs;
  for (int p = 1; p <= 3; ++p) {
    for (int copy = 0; copy < 2; ++copy) {
      const Kernel k =
          diag_free_projection(random_symmetric(sp, p, gen)).kernel;
      fs.push_back(k);
      Fs.push_back(single_term(sp, k));
    }
  }
  const auto values = simulate_expansions(Fs, 100000, 5050);

  double worst_z = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const MeanWithError m = mc_mean(values[i]);
    worst_z = std::max(worst_z, std::abs(m.value) / m.std_error);
    for (std::size_t j = i; j < fs.size(); ++j) {
      const MeanWithError prod = mc_product_mean(values[i], values[j]);
      const double exact =
          fs[i].order() == fs[j].order()
              ? static_cast<double>(factorial(fs[i].order())) *
                    inner_product(fs[i], fs[j])
              : 0.0;
      worst_z =
          std::max(worst_z, std::abs(prod.value - exact) / prod.std_error);
    }
  }
  const double elapsed = seconds_since(t0);
  report(5, "second-moment Monte Carlo",
         worst_z <= 4.0 && elapsed < 120.0,
         "max |error|/se = " + num(worst_z) + ", " + num(elapsed) + " s");
}

void criterion_6() {
  std::mt19937 gen(606);
  double worst_violation = 0.0;  // positive when ordering breaks
  for (std::size_t m = 2; m <= 6; ++m) {
    const SpacePtr sp = random_space(m, gen);
    for (int p = 1; p <= 3; ++p) {
      for (int q = 1; q <= 3; ++q) {
        for (int trial = 0; trial < 2; ++trial) {
          const Kernel f = random_symmetric(sp, p, gen);
          const Kernel g = random_symmetric(sp, q, gen);
          const double target =
              p == q ? static_cast<double>(factorial(p)) *
                               inner_product(f, g) +
                           0.3
                     : 0.2;
          const PairTermBounds b = pair_term_bounds(f, g, target);
          const double scale = std::max(1.0, b.nested);
          worst_violation = std::max(
              worst_violation, (b.exact - b.contraction) / scale);
          worst_violation = std::max(
              worst_violation, (b.contraction - b.nested) / scale);
        }
      }
    }
  }

  const SpacePtr sp = random_space(3, gen);
  const Kernel f = diag_free_projection(random_symmetric(sp, 2, gen)).kernel;
  const double a = 2.0 * inner_product(f, f);
  const ChaosExpansion F = single_term(sp, f);
  const auto pairings = simulate_pairing(F, F, 50000, 6060);
  std::vector<double> sq(pairings.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    sq[i] = (a - pairings[i]) * (a - pairings[i]);
  }
  const MeanWithError mc = mc_mean(sq);
  const PairTermBounds pb = pair_term_bounds(f, f, a);
  const double z = std::abs(mc.value - pb.exact) / mc.std_error;

  report(6, "nested pairing-variance bounds",
         worst_violation <= 1e-10 && z <= 4.0,
         "max ordering violation = " + num(worst_violation) +
             ", MC |error|/se = " + num(z));
}

void criterion_7() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  double worst_lo = 100.0, worst_hi = 0.0;
  for (auto which : {Functional::A, Functional::Q, Functional::Qh}) {
    OUConfig cfg = OUConfig::standard({1.0, 4.0}, 10.0);
    if (which == Functional::Qh) cfg.h = 0.5;
    const SymMatrix limit = oulevy::cov_limit(cfg, which);
    std::vector<double> errs;
    for (double T : {10.0, 100.0, 1000.0}) {
      cfg.T = T;
      double worst = 0.0;
      for (int i = 0; i < 2; ++i) {
        for (int j = i; j < 2; ++j) {
          worst = std::max(worst, std::abs(oulevy::cov_exact(cfg, which, i, j) -
                                           limit.at(i, j)));
        }
      }
      errs.push_back(worst);
    }
    for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
      const double ratio = errs[k] / errs[k + 1];
      worst_lo = std::min(worst_lo, ratio);
      worst_hi = std::max(worst_hi, ratio);
      ok = ok && ratio >= 8.0 && ratio <= 12.0;
    }
  }
  const double elapsed = seconds_since(t0);
  ok = ok && elapsed < 1.0;
  report(7, "covariance limits at rate 1/T", ok,
         "decade ratios in [" + num(worst_lo) + ", " + num(worst_hi) + "], " +
             num(elapsed) + " s");
}

oulevy::RateTable criterion_8_and_9() {
  const auto t0 = std::chrono::steady_clock::now();
  OUConfig base = OUConfig::standard({1.0}, 25.0, 4.0);
  base.h = 0.0;
  // Skewed marks keep the mixed contraction norm positive so every
  // column has a slope to fit.
  base.atoms = {{3.0, 0.5}, {-1.0, 0.5}};
  const std::vector<double> ts{25.0, 50.0, 100.0, 200.0, 400.0};
  const oulevy::RateTable table = oulevy::rate_experiment(base, ts, 4.0);
  const double elapsed = seconds_since(t0);

  const double slopes[5] = {table.slope_mean_l3, table.slope_quad_l4,
                            table.slope_contract21, table.slope_contract11,
                            table.slope_cross11};
  bool ok = elapsed < 300.0;
  double lo = 0.0, hi = -1.0;
  for (double s : slopes) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    ok = ok && s >= -0.60 && s <= -0.40;
  }
  report(8, "vanishing-norm decay slopes", ok,
         "slopes in [" + num(lo) + ", " + num(hi) + "], " + num(elapsed) +
             " s");

  const bool ok9 = table.slope_d3 >= -0.60 && table.slope_d3 <= -0.40;
  report(9, "assembled distance-bound decay", ok9,
         "d3 slope = " + num(table.slope_d3));
  return table;
}

struct SimCase {
  std::string name;
  double d3 = 0.0;
  double worst_excess = 0.0;  // max over functions of gap - (d3 + 4 se)
  std::vector<std::vector<double>> values;  // coordinate-wise, for reuse
};

SimCase run_soundness_case(const char* name, const OUConfig& cfg,
                           Functional which, std::size_t reps,
                           std::uint64_t seed) {
  const oulevy::DemoKit kit = oulevy::build_demo(cfg, which);
  std::vector<Kernel> order1, order2, family;
  for (const Kernel& k : kit.order1) {
    order1.push_back(diag_free_projection(k).kernel);
    family.push_back(order1.back());
  }
  for (const Kernel& k : kit.order2) {
    order2.push_back(diag_free_projection(k).kernel);
    family.push_back(order2.back());
  }

  // Target the exact covariance of the projected grid functionals, so the
  // quadratic gap terms vanish and the bound is as tight as the theory
  // allows on this mesh.
  const SymMatrix C = chaos_covariance(family);
  double d3 = 0.0;
  if (order2.empty()) {
    d3 = first_chaos_bound(order1, C).d3;
  } else {
    d3 = single_double_bound(order1, order2, C).d3_contraction;
  }

  std::vector<ChaosExpansion> Fs;
  for (const Kernel& k : family) Fs.push_back(single_term(kit.grid.space, k));
  SimCase out;
  out.name = name;
  out.d3 = d3;
  out.values = simulate_expansions(Fs, reps, seed);

  const auto tfs = make_test_functions(static_cast<int>(family.size()), 40,
                                       seed + 1);
  const DiscrepancyReport rep = smooth_discrepancy(out.values, tfs, C.a);
  out.worst_excess = -1e300;
  for (std::size_t i = 0; i < rep.gaps.size(); ++i) {
    out.worst_excess = std::max(
        out.worst_excess, rep.gaps[i] - (d3 + 4.0 * rep.std_errors[i]));
  }
  return out;
}

std::vector<std::vector<double>> criterion_10() {
  OUConfig a_cfg = OUConfig::standard({1.0, 4.0}, 200.0, 1.0);
  const SimCase a = run_soundness_case("time-average pair", a_cfg,
                                       Functional::A, 100000, 7001);

  OUConfig q_cfg = OUConfig::standard({1.0}, 400.0, 1.0);
  const SimCase q = run_soundness_case("quadratic functional", q_cfg,
                                       Functional::Q, 100000, 7002);

  OUConfig h_cfg = OUConfig::standard({1.0}, 100.0, 1.0);
  h_cfg.h = 0.5;
  const SimCase qh = run_soundness_case("lagged quadratic functional", h_cfg,
                                        Functional::Qh, 20000, 7003);

  const bool ok = a.worst_excess <= 0.0 && q.worst_excess <= 0.0 &&
                  qh.worst_excess <= 0.0;
  report(10, "discrepancy soundness on shipped examples", ok,
         "max gap excess over bound+4se: " + num(a.worst_excess) + " / " +
             num(q.worst_excess) + " / " + num(qh.worst_excess) +
             ", d3 bounds " + num(a.d3) + " / " + num(q.d3) + " / " +
             num(qh.d3));
  return q.values;
}

void criterion_11(const std::vector<std::vector<double>>& q_values) {
  std::vector<double> total(q_values[0].size());
  for (std::size_t r = 0; r < total.size(); ++r) {
    total[r] = q_values[0][r] + q_values[1][r];
  }
  const SampleStats s = sample_stats(total);
  const bool ok = s.skewness >= -0.15 && s.skewness <= 0.15 &&
                  s.kurtosis >= 2.7 && s.kurtosis <= 3.3;
  report(11, "near-Gaussian shape of the long-horizon functional", ok,
         "skewness = " + num(s.skewness) + ", kurtosis = " + num(s.kurtosis));
}

void criterion_12() {
  OUConfig cfg = OUConfig::standard({1.0}, 50.0, 1.0);
  const oulevy::DemoKit kit = oulevy::build_demo(cfg, Functional::Q);
  const Kernel k1 = diag_free_projection(kit.order1[0]).kernel;
  const Kernel k2 = diag_free_projection(kit.order2[0]).kernel;
  const std::vector<ChaosExpansion> Fs{single_term(kit.grid.space, k1),
                                       single_term(kit.grid.space, k2)};

  const int saved = worker_count();
  set_worker_count(1);
  const auto v1 = simulate_expansions(Fs, 2000, 1212);
  set_worker_count(3);
  const auto v3 = simulate_expansions(Fs, 2000, 1212);
  set_worker_count(saved);

  bool identical = v1.size() == v3.size();
  for (std::size_t i = 0; identical && i < v1.size(); ++i) {
    identical = v1[i].size() == v3[i].size() &&
                std::memcmp(v1[i].data(), v3[i].data(),
                            v1[i].size() * sizeof(double)) == 0;
  }
  identical = identical && serialize_rows(v1) == serialize_rows(v3);
  report(12, "worker-count-independent determinism", identical,
         identical ? "byte-identical across worker counts"
                   : "outputs differ between worker counts");
}

}  // namespace

int main() {
  criterion_1_and_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8_and_9();
  const auto q_values = criterion_10();
  criterion_11(q_values);
  criterion_12();
  return g_all_ok ? 0 : 1;
}

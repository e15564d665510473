#include "poischaos/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "poischaos/parallel.hpp"

namespace poischaos {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

void philox_block(const std::uint32_t ctr[4], const std::uint32_t key[2],
                  std::uint32_t out[4]) {
  std::uint32_t x0 = ctr[0], x1 = ctr[1], x2 = ctr[2], x3 = ctr[3];
  std::uint32_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(kPhiloxM0) * x0;
    const std::uint64_t p1 = std::uint64_t(kPhiloxM1) * x2;
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    x0 = hi1 ^ x1 ^ k0;
    x1 = lo1;
    x2 = hi0 ^ x3 ^ k1;
    x3 = lo0;
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  out[0] = x0;
  out[1] = x1;
  out[2] = x2;
  out[3] = x3;
}

}  // namespace

CellRng::CellRng(std::uint64_t seed, std::uint64_t replication,
                 std::uint32_t cell) {
  key_[0] = static_cast<std::uint32_t>(seed);
  key_[1] = static_cast<std::uint32_t>(seed >> 32);
  base_[0] = cell;
  base_[1] = static_cast<std::uint32_t>(replication);
  base_[2] = static_cast<std::uint32_t>(replication >> 32);
}

void CellRng::refill() {
  const std::uint32_t ctr[4] = {draw_, base_[0], base_[1], base_[2]};
  philox_block(ctr, key_, buf_);
  ++draw_;
  buf_pos_ = 0;
}

std::uint64_t CellRng::next_u64() {
  if (buf_pos_ >= 4) refill();
  const std::uint64_t hi = buf_[buf_pos_];
  const std::uint64_t lo = buf_[buf_pos_ + 1];
  buf_pos_ += 2;
  return (hi << 32) | lo;
}

double CellRng::next_unit() {
  // 53 random bits, offset half a step: values lie strictly inside (0, 1).
  const std::uint64_t bits = next_u64() >> 11;
  return (static_cast<double>(bits) + 0.5) * (1.0 / 9007199254740992.0);
}

double CellRng::next_normal() {
  const double u1 = next_unit();
  const double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

int sample_poisson(double mean, CellRng& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean))
    throw std::invalid_argument("sample_poisson: mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  if (mean <= 10.0) {
    // Knuth's product method: count uniforms until the running product
    // drops below exp(-mean).
    const double limit = std::exp(-mean);
    int k = 0;
    double prod = rng.next_unit();
    while (prod > limit) {
      ++k;
      prod *= rng.next_unit();
    }
    return k;
  }
  // Hormann's transformed rejection (PTRS), valid for mean >= 10.
  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.next_unit() - 0.5;
    double v = rng.next_unit();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<int>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        k * std::log(mean) - mean - std::lgamma(k + 1.0))
      return static_cast<int>(k);
  }
}

namespace {

// Shared by the batch and streaming samplers so they draw identical fields.
void sampled_centered(const DiscreteSpace& space, std::uint64_t seed,
                      std::size_t rep, double* out) {
  for (std::size_t c = 0; c < space.size(); ++c) {
    CellRng rng(seed, rep, static_cast<std::uint32_t>(c));
    out[c] = static_cast<double>(sample_poisson(space.weights[c], rng)) -
             space.weights[c];
  }
}

}  // namespace

SampleBatch sample_counts(const SpacePtr& space, std::size_t reps,
                          std::uint64_t seed) {
  if (!space) throw std::invalid_argument("sample_counts: null space");
  const std::size_t m = space->size();
  if (reps > 100'000'000 / std::max<std::size_t>(m, 1))
    throw guard_error("sample_counts: batch exceeds the in-memory budget");
  SampleBatch batch{space, reps, std::vector<std::int32_t>(reps * m)};
  parallel_for(reps, [&](std::size_t r) {
    for (std::size_t c = 0; c < m; ++c) {
      CellRng rng(seed, r, static_cast<std::uint32_t>(c));
      batch.counts[r * m + c] = sample_poisson(space->weights[c], rng);
    }
  });
  return batch;
}

DiagFreeKernel diag_free_projection(const Kernel& f) {
  const int p = f.order();
  const std::size_t m = f.cell_count();
  if (p <= 1) return {f, 0.0};
  std::vector<double> vals = f.values();
  const std::vector<double>& w = f.space()->weights;
  double removed_sq = 0.0;
  std::vector<std::size_t> idx(p);
  for (std::size_t flat = 0; flat < vals.size(); ++flat) {
    std::size_t rest = flat;
    for (int d = p - 1; d >= 0; --d) {
      idx[d] = rest % m;
      rest /= m;
    }
    bool repeat = false;
    for (int i = 0; i < p && !repeat; ++i)
      for (int j = i + 1; j < p; ++j)
        if (idx[i] == idx[j]) {
          repeat = true;
          break;
        }
    if (!repeat) continue;
    double wt = 1.0;
    for (int d = 0; d < p; ++d) wt *= w[idx[d]];
    removed_sq += wt * vals[flat] * vals[flat];
    vals[flat] = 0.0;
  }
  Kernel out(f.space(), p, std::move(vals), f.symmetric());
  return {std::move(out), std::sqrt(removed_sq)};
}

namespace {

// Full multilinear sum by repeated axis contraction. Equals the multiple
// integral only for diagonal-free kernels; the public wrapper checks that,
// the streaming engine projects once and skips the check.
double eval_contraction(const Kernel& f, const std::vector<double>& centered) {
  const std::size_t m = f.cell_count();
  const int p = f.order();
  if (p == 0) return f.values()[0];
  // Contract the first axis against the centered field, then repeat on the
  // shrinking buffer. The first pass reads the kernel in place.
  const std::vector<double>& src = f.values();
  std::size_t tail = src.size() / m;
  std::vector<double> buf(tail, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double vi = centered[i];
    const double* row = src.data() + i * tail;
    for (std::size_t j = 0; j < tail; ++j) buf[j] += vi * row[j];
  }
  for (int step = 1; step < p; ++step) {
    tail /= m;
    std::vector<double> next(tail, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double vi = centered[i];
      const double* row = buf.data() + i * tail;
      for (std::size_t j = 0; j < tail; ++j) next[j] += vi * row[j];
    }
    buf.swap(next);
  }
  return buf[0];
}

void require_diag_free(const Kernel& f) {
  const int p = f.order();
  if (p < 2) return;
  const std::size_t m = f.cell_count();
  const std::vector<double>& vals = f.values();
  std::vector<std::size_t> idx(p);
  for (std::size_t flat = 0; flat < vals.size(); ++flat) {
    if (vals[flat] == 0.0) continue;
    std::size_t rest = flat;
    for (int d = p - 1; d >= 0; --d) {
      idx[d] = rest % m;
      rest /= m;
    }
    for (int i = 0; i < p; ++i) {
      for (int j = i + 1; j < p; ++j) {
        if (idx[i] == idx[j])
          throw std::invalid_argument(
              "eval_multiple_integral: kernel is not diagonal-free");
      }
    }
  }
}

}  // namespace

double eval_multiple_integral(const Kernel& f,
                              const std::vector<double>& centered) {
  if (centered.size() != f.cell_count())
    throw std::invalid_argument(
        "eval_multiple_integral: field size != cell count");
  require_diag_free(f);
  return eval_contraction(f, centered);
}

namespace {

ChaosExpansion project_expansion(const ChaosExpansion& F) {
  std::vector<Kernel> kernels;
  kernels.reserve(F.kernels.size());
  for (const Kernel& k : F.kernels)
    kernels.push_back(diag_free_projection(k).kernel);
  return ChaosExpansion{F.space, F.mean, std::move(kernels)};
}

double chaos_value(const ChaosExpansion& proj,
                   const std::vector<double>& centered) {
  double v = proj.mean;
  for (int k = 1; k <= proj.max_order(); ++k)
    v += eval_contraction(proj.kernel(k), centered);
  return v;
}

// Per-cell derivative values: out[z] = sum_p coef(p) I_{p-1}(f_p(z, .)),
// with coef(p) = p for the plain derivative and 1 for -D L^{-1}. Contracts
// the trailing axes so the symmetric kernel's leading axis stays free.
std::vector<double> derivative_profile(const ChaosExpansion& proj,
                                       const std::vector<double>& centered,
                                       bool order_weighted) {
  const std::size_t m = proj.space->size();
  std::vector<double> out(m, 0.0);
  std::vector<double> buf, next;
  for (int p = 1; p <= proj.max_order(); ++p) {
    const double coef = order_weighted ? static_cast<double>(p) : 1.0;
    const std::vector<double>& vals = proj.kernel(p).values();
    if (p == 1) {
      for (std::size_t z = 0; z < m; ++z) out[z] += coef * vals[z];
      continue;
    }
    std::size_t rows = vals.size() / m;
    buf.assign(rows, 0.0);
    for (std::size_t J = 0; J < rows; ++J) {
      const double* row = vals.data() + J * m;
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += row[i] * centered[i];
      buf[J] = acc;
    }
    for (int step = 2; step < p; ++step) {
      rows /= m;
      next.assign(rows, 0.0);
      for (std::size_t J = 0; J < rows; ++J) {
        const double* row = buf.data() + J * m;
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += row[i] * centered[i];
        next[J] = acc;
      }
      buf.swap(next);
    }
    for (std::size_t z = 0; z < m; ++z) out[z] += coef * buf[z];
  }
  return out;
}

double pairing_value(const ChaosExpansion& projF, const ChaosExpansion& projG,
                     const std::vector<double>& centered) {
  const std::vector<double>& w = projF.space->weights;
  const std::vector<double> a = derivative_profile(projF, centered, true);
  const std::vector<double> b = derivative_profile(projG, centered, false);
  double s = 0.0;
  for (std::size_t z = 0; z < w.size(); ++z) s += w[z] * a[z] * b[z];
  return s;
}

}  // namespace

double eval_chaos(const ChaosExpansion& F,
                  const std::vector<double>& centered) {
  return chaos_value(project_expansion(F), centered);
}

double eval_malliavin_pairing(const ChaosExpansion& F, const ChaosExpansion& G,
                              const std::vector<double>& centered) {
  if (!same_space(F.space, G.space))
    throw std::invalid_argument("eval_malliavin_pairing: space mismatch");
  return pairing_value(project_expansion(F), project_expansion(G), centered);
}

namespace {

// Flop-count proxy for one replication: evaluating an order-k term costs
// about m^k. Keeps runaway configs from silently pinning the machine.
// Stored replication values are capped separately since a cheap family
// with an enormous rep count exhausts memory instead of CPU.
void require_work_budget(const std::vector<const ChaosExpansion*>& Fs,
                         std::size_t reps) {
  double per_rep = 0.0;
  for (const ChaosExpansion* F : Fs) {
    const double m = static_cast<double>(F->space->size());
    for (const Kernel& k : F->kernels)
      per_rep += std::pow(m, static_cast<double>(k.order()));
  }
  if (per_rep * static_cast<double>(reps) > 4e12)
    throw guard_error(
        "simulate: cells^order x replications exceeds the work budget");
  if (static_cast<double>(Fs.size()) * static_cast<double>(reps) > 1e8)
    throw guard_error(
        "simulate: stored replication values exceed the memory budget");
}

}  // namespace

std::vector<std::vector<double>> simulate_expansions(
    const std::vector<ChaosExpansion>& Fs, std::size_t reps,
    std::uint64_t seed) {
  if (Fs.empty())
    throw std::invalid_argument("simulate_expansions: no expansions");
  const SpacePtr space = Fs[0].space;
  for (const ChaosExpansion& F : Fs)
    if (!same_space(F.space, space))
      throw std::invalid_argument("simulate_expansions: space mismatch");
  {
    std::vector<const ChaosExpansion*> ptrs;
    for (const ChaosExpansion& F : Fs) ptrs.push_back(&F);
    require_work_budget(ptrs, reps);
  }
  std::vector<ChaosExpansion> proj;
  proj.reserve(Fs.size());
  for (const ChaosExpansion& F : Fs) proj.push_back(project_expansion(F));

  const std::size_t m = space->size();
  std::vector<std::vector<double>> values(Fs.size(),
                                          std::vector<double>(reps, 0.0));
  parallel_for(reps, [&](std::size_t r) {
    std::vector<double> centered(m);
    sampled_centered(*space, seed, r, centered.data());
    for (std::size_t i = 0; i < proj.size(); ++i)
      values[i][r] = chaos_value(proj[i], centered);
  });
  return values;
}

std::vector<double> simulate_pairing(const ChaosExpansion& F,
                                     const ChaosExpansion& G,
                                     std::size_t reps, std::uint64_t seed) {
  if (!same_space(F.space, G.space))
    throw std::invalid_argument("simulate_pairing: space mismatch");
  require_work_budget({&F, &G}, reps);
  const ChaosExpansion projF = project_expansion(F);
  const ChaosExpansion projG = project_expansion(G);
  const std::size_t m = F.space->size();
  std::vector<double> values(reps, 0.0);
  parallel_for(reps, [&](std::size_t r) {
    std::vector<double> centered(m);
    sampled_centered(*F.space, seed, r, centered.data());
    values[r] = pairing_value(projF, projG, centered);
  });
  return values;
}

MeanWithError mc_mean(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mc_mean: empty sample");
  const std::size_t n = xs.size();
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  if (n < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, sd / std::sqrt(static_cast<double>(n))};
}

MeanWithError mc_product_mean(const std::vector<double>& xs,
                              const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("mc_product_mean: length mismatch");
  std::vector<double> prod(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) prod[i] = xs[i] * ys[i];
  return mc_mean(prod);
}

SampleStats sample_stats(const std::vector<double>& xs) {
  if (xs.size() < 2)
    throw std::invalid_argument("sample_stats: need at least two values");
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  SampleStats s;
  s.mean = mean;
  s.sd = std::sqrt(m2);
  s.skewness = m3 / (m2 * std::sqrt(m2));
  s.kurtosis = m4 / (m2 * m2);
  return s;
}

std::vector<TestFunction> make_test_functions(int dim, int count,
                                              std::uint64_t seed) {
  if (dim < 1 || count < 1)
    throw std::invalid_argument("make_test_functions: dim and count >= 1");
  std::vector<TestFunction> tfs(count);
  for (int j = 0; j < count; ++j) {
    // A cell index far above any grid size keeps these streams disjoint
    // from field sampling under the same seed.
    CellRng rng(seed, static_cast<std::uint64_t>(j), 0xF00DF00Du);
    TestFunction tf;
    tf.freq.resize(dim);
    double l1 = 0.0;
    for (int i = 0; i < dim; ++i) {
      tf.freq[i] = rng.next_normal();
      l1 += std::fabs(tf.freq[i]);
    }
    if (l1 == 0.0) {
      tf.freq[0] = 1.0;
      l1 = 1.0;
    }
    for (int i = 0; i < dim; ++i) tf.freq[i] /= l1;
    tf.phase = 2.0 * 3.14159265358979323846 * rng.next_unit();
    tfs[j] = std::move(tf);
  }
  return tfs;
}

double gaussian_cos_moment(const TestFunction& tf,
                           const std::vector<double>& cov, int dim) {
  if (static_cast<int>(tf.freq.size()) != dim ||
      cov.size() != static_cast<std::size_t>(dim) * dim)
    throw std::invalid_argument("gaussian_cos_moment: dimension mismatch");
  double quad = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      quad += tf.freq[i] * cov[i * dim + j] * tf.freq[j];
  return std::cos(tf.phase) * std::exp(-0.5 * quad);
}

DiscrepancyReport smooth_discrepancy(
    const std::vector<std::vector<double>>& values,
    const std::vector<TestFunction>& tfs, const std::vector<double>& cov) {
  if (values.empty())
    throw std::invalid_argument("smooth_discrepancy: no value series");
  if (tfs.empty()) return {};  // no functions, no observable gap
  const int dim = static_cast<int>(values.size());
  const std::size_t reps = values[0].size();
  for (const std::vector<double>& v : values)
    if (v.size() != reps)
      throw std::invalid_argument("smooth_discrepancy: ragged value series");

  DiscrepancyReport rep;
  rep.gaps.resize(tfs.size());
  rep.std_errors.resize(tfs.size());
  std::vector<double> g(reps);
  for (std::size_t t = 0; t < tfs.size(); ++t) {
    const TestFunction& tf = tfs[t];
    if (static_cast<int>(tf.freq.size()) != dim)
      throw std::invalid_argument("smooth_discrepancy: dimension mismatch");
    for (std::size_t r = 0; r < reps; ++r) {
      double arg = tf.phase;
      for (int i = 0; i < dim; ++i) arg += tf.freq[i] * values[i][r];
      g[r] = std::cos(arg);
    }
    const MeanWithError m = mc_mean(g);
    const double target = gaussian_cos_moment(tf, cov, dim);
    rep.gaps[t] = std::fabs(m.value - target);
    rep.std_errors[t] = m.std_error;
    if (rep.gaps[t] > rep.max_gap) {
      rep.max_gap = rep.gaps[t];
      rep.max_gap_se = rep.std_errors[t];
      rep.argmax = static_cast<int>(t);
    }
  }
  return rep;
}

}  // namespace poischaos

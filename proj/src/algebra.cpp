#include "poischaos/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poischaos/parallel.hpp"

namespace poischaos {

bool ContractionSpec::valid() const {
  return p >= 0 && q >= 0 && l >= 0 && l <= r && r <= std::min(p, q);
}

std::string ContractionSpec::describe() const {
  return "contraction(p=" + std::to_string(p) + ", q=" + std::to_string(q) +
         ", r=" + std::to_string(r) + ", l=" + std::to_string(l) + ")";
}

namespace {

std::vector<std::vector<int>> permutations_of(int p) {
  std::vector<int> base(p);
  std::iota(base.begin(), base.end(), 0);
  std::vector<std::vector<int>> perms;
  do {
    perms.push_back(base);
  } while (std::next_permutation(base.begin(), base.end()));
  return perms;
}

void decode(std::size_t flat, std::size_t m, int p, std::size_t* digits) {
  for (int d = p - 1; d >= 0; --d) {
    digits[d] = flat % m;
    flat /= m;
  }
}

void require_star_inputs(const Kernel& f, const Kernel& g, int r, int l,
                         const char* op) {
  ContractionSpec spec{f.order(), g.order(), r, l};
  if (!spec.valid())
    throw std::invalid_argument(std::string(op) + ": invalid " +
                                spec.describe());
  if (!same_space(f.space(), g.space()))
    throw std::invalid_argument(std::string(op) +
                                ": kernels live on different spaces");
  if (!f.symmetric() || !g.symmetric())
    throw std::invalid_argument(
        std::string(op) +
        ": inputs must be symmetric kernels (apply symmetrize first)");
}

}  // namespace

Kernel symmetrize(const Kernel& f) {
  const int p = f.order();
  if (p <= 1) {
    Kernel out = f;
    out.set_symmetric(true);
    return out;
  }
  const std::size_t m = f.cell_count();
  const std::vector<double>& in = f.values();
  std::vector<double> out(in.size());
  if (p == 2) {
    parallel_for(m, [&](std::size_t i) {
      for (std::size_t j = 0; j < m; ++j)
        out[i * m + j] = 0.5 * (in[i * m + j] + in[j * m + i]);
    });
    return Kernel(f.space(), p, std::move(out), true);
  }
  const auto perms = permutations_of(p);
  const double inv = 1.0 / static_cast<double>(perms.size());
  parallel_for(in.size(), [&](std::size_t flat) {
    std::size_t digits[kMaxKernelOrder];
    decode(flat, m, p, digits);
    double acc = 0.0;
    for (const auto& perm : perms) {
      std::size_t src = 0;
      for (int d = 0; d < p; ++d) src = src * m + digits[perm[d]];
      acc += in[src];
    }
    out[flat] = acc * inv;
  });
  return Kernel(f.space(), p, std::move(out), true);
}

Kernel star_contract(const Kernel& f, const Kernel& g, int r, int l) {
  require_star_inputs(f, g, r, l, "star_contract");
  const int p = f.order(), q = g.order();
  const std::size_t m = f.cell_count();
  const auto& w = f.space()->weights;
  const int ng = r - l, nt = p - r, ns = q - r;
  const int n_out = ng + nt + ns;

  // Hot cases for large spaces, written against contiguous rows. Symmetry
  // lets f(z, t) be read as f(t, z).
  if (p == 2 && q == 2 && r == 1 && l == 1) {
    // out(t, s) = sum_z w(z) f(t, z) g(z, s)
    const auto& fv = f.values();
    const auto& gv = g.values();
    std::vector<double> out(m * m, 0.0);
    parallel_for(m, [&](std::size_t t) {
      double* row = out.data() + t * m;
      for (std::size_t z = 0; z < m; ++z) {
        const double a = fv[t * m + z] * w[z];
        const double* grow = gv.data() + z * m;
        for (std::size_t s = 0; s < m; ++s) row[s] += a * grow[s];
      }
    });
    return Kernel(f.space(), 2, std::move(out));
  }
  if (p == 2 && q == 2 && r == 2 && l == 1) {
    // out(c) = sum_z w(z) f(c, z) g(c, z)
    const auto& fv = f.values();
    const auto& gv = g.values();
    std::vector<double> out(m);
    parallel_for(m, [&](std::size_t c) {
      double acc = 0.0;
      for (std::size_t z = 0; z < m; ++z)
        acc += w[z] * fv[c * m + z] * gv[c * m + z];
      out[c] = acc;
    });
    return Kernel(f.space(), 1, std::move(out));
  }
  if (p == 1 && q == 2 && r == 1 && l == 1) {
    // out(s) = sum_z w(z) f(z) g(s, z)
    const auto& fv = f.values();
    const auto& gv = g.values();
    std::vector<double> out(m);
    parallel_for(m, [&](std::size_t s) {
      double acc = 0.0;
      for (std::size_t z = 0; z < m; ++z)
        acc += w[z] * fv[z] * gv[s * m + z];
      out[s] = acc;
    });
    return Kernel(f.space(), 1, std::move(out));
  }
  if (p == 2 && q == 1 && r == 1 && l == 1) {
    const auto& fv = f.values();
    const auto& gv = g.values();
    std::vector<double> out(m);
    parallel_for(m, [&](std::size_t t) {
      double acc = 0.0;
      for (std::size_t z = 0; z < m; ++z)
        acc += w[z] * fv[t * m + z] * gv[z];
      out[t] = acc;
    });
    return Kernel(f.space(), 1, std::move(out));
  }

  // General path: loop over output tuples, inner odometer over the l
  // integrated cells. Weight products for the integrated block are
  // precomputed once.
  const std::size_t n_z = pow_size(m, l);
  std::vector<double> wz(n_z, 1.0);
  {
    std::vector<std::size_t> zd(l, 0);
    for (std::size_t zf = 0; zf < n_z; ++zf) {
      double prod = 1.0;
      for (int d = 0; d < l; ++d) prod *= w[zd[d]];
      wz[zf] = prod;
      for (int d = l - 1; d >= 0; --d) {
        if (++zd[d] < m) break;
        zd[d] = 0;
      }
    }
  }
  const std::size_t out_n = pow_size(m, n_out);
  const std::size_t f_tail = pow_size(m, p - l);  // digits after z in f
  const std::size_t g_tail = pow_size(m, q - l);
  std::vector<double> out(out_n);
  parallel_for(out_n, [&](std::size_t flat) {
    std::size_t digits[2 * kMaxKernelOrder];
    decode(flat, m, n_out, digits);
    const std::size_t* gam = digits;
    const std::size_t* tt = digits + ng;
    const std::size_t* ss = digits + ng + nt;
    // base indices for the non-integrated digits of f and g
    std::size_t fb = 0;
    for (int d = 0; d < ng; ++d) fb = fb * m + gam[d];
    for (int d = 0; d < nt; ++d) fb = fb * m + tt[d];
    std::size_t gb = 0;
    for (int d = 0; d < ng; ++d) gb = gb * m + gam[d];
    for (int d = 0; d < ns; ++d) gb = gb * m + ss[d];
    const double* fv = f.values().data();
    const double* gv = g.values().data();
    double acc = 0.0;
    for (std::size_t zf = 0; zf < n_z; ++zf)
      acc += wz[zf] * fv[zf * f_tail + fb] * gv[zf * g_tail + gb];
    out[flat] = acc;
  });
  return Kernel(f.space(), n_out, std::move(out));
}

std::pair<double, double> contraction_identity(const Kernel& f,
                                               const Kernel& g, int s, int t) {
  const int p = f.order(), q = g.order();
  if (!(1 <= s && s <= t && t <= std::min(p, q)))
    throw std::invalid_argument(
        "contraction_identity: need 1 <= s <= t <= min(p, q)");
  const Kernel fg = star_contract(f, g, t, s);
  const double lhs = inner_product(fg, fg);
  const Kernel ff = star_contract(f, f, p - s, p - t);
  const Kernel gg = star_contract(g, g, q - s, q - t);
  const double rhs = inner_product(ff, gg);
  return {lhs, rhs};
}

std::pair<double, double> useful_identity(const Kernel& f, const Kernel& g,
                                          int r) {
  const int p = f.order(), q = g.order();
  if (!(1 <= r && r <= std::min(p, q)))
    throw std::invalid_argument("useful_identity: need 1 <= r <= min(p, q)");
  const Kernel fg = star_contract(f, g, r, 0);
  const double lhs = inner_product(fg, fg);
  const Kernel ff = star_contract(f, f, p, p - r);
  const Kernel gg = star_contract(g, g, q, q - r);
  const double rhs = inner_product(ff, gg);
  return {lhs, rhs};
}

double star_norm(const Kernel& f, const Kernel& g, int r, int l) {
  const int p = f.order(), q = g.order();
  ContractionSpec spec{p, q, r, l};
  if (!spec.valid())
    throw std::invalid_argument("star_norm: invalid " + spec.describe());
  if (r == 0) return l2_norm(f) * l2_norm(g);
  const std::size_t m = f.cell_count();
  const int direct_order = spec.result_order();
  bool direct_ok = direct_order <= kMaxKernelOrder;
  if (direct_ok) {
    // Also skip the direct tensor when it is merely huge.
    std::size_t entries = 1;
    for (int i = 0; i < direct_order && direct_ok; ++i) {
      if (entries > 20'000'000 / std::max<std::size_t>(m, 1))
        direct_ok = false;
      else
        entries *= m;
    }
  }
  if (direct_ok) return l2_norm(star_contract(f, g, r, l));
  // Rearranged route: the squared norm is an inner product of two
  // self-contractions of order r + l (l >= 1) or r (l = 0), both at most
  // min(p, q) and so always representable.
  const Kernel ff = l >= 1 ? star_contract(f, f, p - l, p - r)
                           : star_contract(f, f, p, p - r);
  if (&f == &g) return std::sqrt(std::max(0.0, inner_product(ff, ff)));
  const Kernel gg = l >= 1 ? star_contract(g, g, q - l, q - r)
                           : star_contract(g, g, q, q - r);
  return std::sqrt(std::max(0.0, inner_product(ff, gg)));
}

namespace {

void add_scaled(std::vector<double>& acc, const std::vector<double>& v,
                double c) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += c * v[i];
}

}  // namespace

Kernel g_operator(const Kernel& f, const Kernel& g, int k) {
  const int p = f.order(), q = g.order();
  if (k < std::abs(q - p) || k > p + q)
    throw std::invalid_argument("g_operator: k must be in [|q-p|, p+q], got " +
                                std::to_string(k));
  Kernel acc = Kernel::zero(f.space(), k);
  for (int r = 0; r <= std::min(p, q); ++r) {
    for (int l = 0; l <= r; ++l) {
      if (p + q - r - l != k) continue;
      const double coeff = static_cast<double>(factorial(r)) *
                           static_cast<double>(binomial(p, r)) *
                           static_cast<double>(binomial(q, r)) *
                           static_cast<double>(binomial(r, l));
      const Kernel term = symmetrize(star_contract(f, g, r, l));
      add_scaled(acc.values(), term.values(), coeff);
    }
  }
  acc.set_symmetric(true);
  return acc;
}

namespace {

void require_ghat_args(const Kernel& f, const Kernel& g, int k,
                       const char* op) {
  const int p = f.order(), q = g.order();
  if (p < 1 || q < 1)
    throw std::invalid_argument(std::string(op) +
                                ": kernel orders must be >= 1");
  if (k < std::abs(q - p) || k > p + q - 2)
    throw std::invalid_argument(std::string(op) +
                                ": k must be in [|q-p|, p+q-2], got " +
                                std::to_string(k));
  if (k == 0 && p != q)
    throw std::invalid_argument(std::string(op) +
                                ": k = 0 requires equal orders");
}

}  // namespace

Kernel g_hat_operator(const Kernel& f, const Kernel& g, int k) {
  require_ghat_args(f, g, k, "g_hat_operator");
  const int p = f.order(), q = g.order();
  Kernel acc = Kernel::zero(f.space(), k);
  for (int t = 1; t <= std::min(p, q); ++t) {
    const int s = p + q - k - t;
    if (s < 1 || s > t) continue;
    const double coeff = static_cast<double>(factorial(t - 1)) *
                         static_cast<double>(binomial(p - 1, t - 1)) *
                         static_cast<double>(binomial(q - 1, t - 1)) *
                         static_cast<double>(binomial(t - 1, s - 1));
    const Kernel term = symmetrize(star_contract(f, g, t, s));
    add_scaled(acc.values(), term.values(), coeff);
  }
  acc.set_symmetric(true);
  return acc;
}

Kernel g_hat_slice_sum(const Kernel& f, const Kernel& g, int k) {
  require_ghat_args(f, g, k, "g_hat_slice_sum");
  const std::size_t m = f.cell_count();
  const auto& w = f.space()->weights;
  Kernel acc = Kernel::zero(f.space(), k);
  for (std::size_t z = 0; z < m; ++z) {
    const Kernel gz = g_operator(slice(f, z), slice(g, z), k);
    add_scaled(acc.values(), gz.values(), w[z]);
  }
  acc.set_symmetric(true);
  return acc;
}

std::pair<double, double> g_hat_norm_bound(const Kernel& f, const Kernel& g,
                                           int k) {
  require_ghat_args(f, g, k, "g_hat_norm_bound");
  if (k < 1)
    throw std::invalid_argument(
        "g_hat_norm_bound: k = 0 is the deterministic component; the norm "
        "control applies to k >= 1");
  const int p = f.order(), q = g.order();
  const Kernel ghat = g_hat_operator(f, g, k);
  const double lhs = inner_product(ghat, ghat);
  double coeff_sq_sum = 0.0;
  double norm_sum = 0.0;
  for (int t = 1; t <= std::min(p, q); ++t) {
    const int s = p + q - k - t;
    // binomial() is zero for s outside [1, t], so out-of-range terms drop
    // from the constant on their own; the norm needs the explicit skip.
    const double coeff = static_cast<double>(factorial(t - 1)) *
                         static_cast<double>(binomial(p - 1, t - 1)) *
                         static_cast<double>(binomial(q - 1, t - 1)) *
                         static_cast<double>(binomial(t - 1, s - 1));
    coeff_sq_sum += coeff * coeff;
    if (s < 1 || s > t) continue;
    const Kernel term = symmetrize(star_contract(f, g, t, s));
    norm_sum += inner_product(term, term);
  }
  return {lhs, coeff_sq_sum * norm_sum};
}

std::vector<std::pair<int, Kernel>> product_expand(const Kernel& f,
                                                   const Kernel& g) {
  const int p = f.order(), q = g.order();
  std::vector<std::pair<int, Kernel>> out;
  for (int k = std::abs(q - p); k <= p + q; ++k)
    out.emplace_back(k, g_operator(f, g, k));
  return out;
}

ContractionNormReport assumption_a_check(const Kernel& f) {
  const int p = f.order();
  if (p < 1)
    throw std::invalid_argument("assumption_a_check: order must be >= 1");
  ContractionNormReport rep;
  for (int r = 1; r <= p; ++r) {
    const Kernel c = star_contract(f, f, p, p - r);
    const double n = l2_norm(c);
    rep.nested_self_norms.push_back(n);
    if (!std::isfinite(n)) rep.ok = false;
  }
  rep.l4_norm = lp_norm(f, 4.0);
  if (!std::isfinite(rep.l4_norm)) rep.ok = false;
  return rep;
}

std::vector<AbsContractionEntry> assumption_b_check(const Kernel& f) {
  const int p = f.order();
  if (p < 1)
    throw std::invalid_argument("assumption_b_check: order must be >= 1");
  std::vector<double> av(f.values().size());
  for (std::size_t i = 0; i < av.size(); ++i) av[i] = std::fabs(f.values()[i]);
  const Kernel absf(f.space(), p, std::move(av), f.symmetric());
  std::vector<AbsContractionEntry> out;
  for (int r = 1; r <= p; ++r) {
    for (int l = 1; l <= r; ++l) {
      const Kernel c = star_contract(absf, absf, r, l);
      double mx = 0.0;
      for (double v : c.values()) mx = std::fmax(mx, std::fabs(v));
      out.push_back({r, l, mx});
    }
  }
  return out;
}

double assumption_c_value(const Kernel& f, const Kernel& g, int k) {
  require_ghat_args(f, g, k, "assumption_c_value");
  const std::size_t m = f.cell_count();
  const auto& w = f.space()->weights;
  double acc = 0.0;
  for (std::size_t z = 0; z < m; ++z) {
    const Kernel gz = g_operator(slice(f, z), slice(g, z), k);
    acc += w[z] * l2_norm(gz);
  }
  return acc;
}

}  // namespace poischaos

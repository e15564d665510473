#include "poischaos/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poischaos/algebra.hpp"

namespace poischaos {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_matrix(const SymMatrix& M, const char* op) {
  if (M.dim < 1 || M.dim > kMaxMatrixDim)
    throw std::invalid_argument(std::string(op) + ": dimension out of range");
  if (M.a.size() != static_cast<std::size_t>(M.dim) * M.dim)
    throw std::invalid_argument(std::string(op) + ": bad value count");
}

void require_single_order_family(const std::vector<Kernel>& fs,
                                 const char* op) {
  if (fs.empty())
    throw std::invalid_argument(std::string(op) + ": no kernels");
  for (const Kernel& f : fs) {
    if (f.order() < 1)
      throw std::invalid_argument(std::string(op) + ": order-0 kernel");
    if (!f.symmetric())
      throw std::invalid_argument(std::string(op) +
                                  ": kernels must be symmetric");
    if (!same_space(f.space(), fs[0].space()))
      throw std::invalid_argument(std::string(op) + ": space mismatch");
  }
}

}  // namespace

SymMatrix make_sym_matrix(int dim, std::vector<double> values) {
  SymMatrix M{dim, std::move(values)};
  require_matrix(M, "make_sym_matrix");
  double maxabs = 0.0;
  for (double v : M.a) maxabs = std::max(maxabs, std::fabs(v));
  const double tol = 1e-12 * std::max(1.0, maxabs);
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      if (std::fabs(M.at(i, j) - M.at(j, i)) > tol)
        throw std::invalid_argument("make_sym_matrix: matrix not symmetric");
  return M;
}

std::vector<double> jacobi_eigenvalues(const SymMatrix& M) {
  require_matrix(M, "jacobi_eigenvalues");
  const int n = M.dim;
  std::vector<double> a = M.a;
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::fabs(v));
  const double stop = 1e-12 * std::max(1.0, scale);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
    if (std::sqrt(off) <= stop) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::fabs(apq) <= 1e-300) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) /
            (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a[i * n + i];
  std::sort(eig.begin(), eig.end());
  return eig;
}

double op_norm(const SymMatrix& M) {
  const std::vector<double> eig = jacobi_eigenvalues(M);
  return std::max(std::fabs(eig.front()), std::fabs(eig.back()));
}

double hs_norm(const SymMatrix& M) {
  require_matrix(M, "hs_norm");
  double s = 0.0;
  for (double v : M.a) s += v * v;
  return std::sqrt(s);
}

double hs_distance(const SymMatrix& A, const SymMatrix& B) {
  require_matrix(A, "hs_distance");
  require_matrix(B, "hs_distance");
  if (A.dim != B.dim)
    throw std::invalid_argument("hs_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < A.a.size(); ++i)
    s += (A.a[i] - B.a[i]) * (A.a[i] - B.a[i]);
  return std::sqrt(s);
}

bool is_nonneg_definite(const SymMatrix& M) {
  return jacobi_eigenvalues(M).front() >= -1e-10;
}

bool is_pos_definite(const SymMatrix& M) {
  const std::vector<double> eig = jacobi_eigenvalues(M);
  const double op = std::max(std::fabs(eig.front()), std::fabs(eig.back()));
  return eig.front() > 1e-10 * op;
}

SteinConstants d2_constants(const SymMatrix& C) {
  if (!is_pos_definite(C))
    throw std::invalid_argument(
        "d2_constants: target covariance must be positive definite");
  const std::vector<double> eig = jacobi_eigenvalues(C);
  const double op = eig.back();
  const double inv_op = 1.0 / eig.front();
  SteinConstants k;
  k.quad = inv_op * std::sqrt(op);
  k.cubic = (std::sqrt(2.0 * kPi) / 8.0) * inv_op * std::sqrt(inv_op) * op;
  return k;
}

SteinConstants d3_constants(const SymMatrix& C) {
  if (!is_nonneg_definite(C))
    throw std::invalid_argument(
        "d3_constants: target covariance must be nonnegative definite");
  return {0.5, 0.25};
}

PairTermBounds pair_term_bounds(const Kernel& f, const Kernel& g,
                                double target) {
  const int p = f.order(), q = g.order();
  if (p < 1 || q < 1)
    throw std::invalid_argument("pair_term_bounds: orders must be >= 1");
  if (!f.symmetric() || !g.symmetric())
    throw std::invalid_argument("pair_term_bounds: kernels must be symmetric");
  if (!same_space(f.space(), g.space()))
    throw std::invalid_argument("pair_term_bounds: space mismatch");

  double base;
  if (p == q) {
    const double c0 =
        static_cast<double>(factorial(p)) * inner_product(f, g);
    base = (c0 - target) * (c0 - target);
  } else {
    base = target * target;
  }
  PairTermBounds out{base, base, base};

  const double lead = static_cast<double>(p) * static_cast<double>(p);
  const int k_lo = (p == q) ? 1 : std::abs(q - p);
  for (int k = k_lo; k <= p + q - 2; ++k) {
    const auto [component_sq, contraction_bound] = g_hat_norm_bound(f, g, k);
    // Same coefficient sum as the contraction bound, with each symmetrized
    // cross norm replaced by the product of nested self-contraction norms.
    double coeff_sq = 0.0;
    double prods = 0.0;
    for (int t = 1; t <= std::min(p, q); ++t) {
      const int s = p + q - k - t;
      const double c = static_cast<double>(factorial(t - 1)) *
                       static_cast<double>(binomial(p - 1, t - 1)) *
                       static_cast<double>(binomial(q - 1, t - 1)) *
                       static_cast<double>(binomial(t - 1, s - 1));
      coeff_sq += c * c;
      if (1 <= s && s <= t)
        prods += star_norm(f, f, p - s, p - t) * star_norm(g, g, q - s, q - t);
    }
    const double fk = static_cast<double>(factorial(k));
    out.exact += lead * fk * component_sq;
    out.contraction += lead * fk * contraction_bound;
    out.nested += lead * fk * coeff_sq * prods;
  }
  return out;
}

double third_moment_term(const std::vector<Kernel>& fs) {
  require_single_order_family(fs, "third_moment_term");
  const double d = static_cast<double>(fs.size());
  int q_min = fs[0].order();
  for (const Kernel& f : fs) q_min = std::min(q_min, f.order());

  double total = 0.0;
  for (const Kernel& f : fs) {
    const int qi = f.order();
    const double lead = static_cast<double>(qi) * qi * qi *
                        std::sqrt(static_cast<double>(factorial(qi - 1))) *
                        l2_norm(f);
    double inner = 0.0;
    for (int b = 1; b <= qi; ++b) {
      for (int a = 0; a <= b - 1; ++a) {
        if (a + b < 1 || a + b > 2 * qi - 1) continue;
        const double coef =
            std::sqrt(static_cast<double>(factorial(a + b - 1))) *
            static_cast<double>(factorial(qi - a - 1)) *
            static_cast<double>(binomial(qi - 1, qi - 1 - a)) *
            static_cast<double>(binomial(qi - 1, qi - 1 - a)) *
            static_cast<double>(binomial(qi - 1 - a, qi - b));
        inner += coef * star_norm(f, f, b, a);
      }
    }
    total += lead * inner;
  }
  return (d * d / static_cast<double>(q_min)) * total;
}

double first_chaos_cubic_exact(const std::vector<Kernel>& hs) {
  require_single_order_family(hs, "first_chaos_cubic_exact");
  for (const Kernel& h : hs)
    if (h.order() != 1)
      throw std::invalid_argument(
          "first_chaos_cubic_exact: all kernels must have order 1");
  const std::vector<double>& w = hs[0].space()->weights;
  double s = 0.0;
  for (std::size_t z = 0; z < w.size(); ++z) {
    double abs_sum = 0.0;
    for (const Kernel& h : hs) abs_sum += std::fabs(h.values()[z]);
    s += w[z] * abs_sum * abs_sum * abs_sum;
  }
  return s;
}

DistanceBound chaos_vector_bound(const std::vector<Kernel>& fs,
                                 const SymMatrix& C, int level) {
  require_single_order_family(fs, "chaos_vector_bound");
  require_matrix(C, "chaos_vector_bound");
  if (C.dim != static_cast<int>(fs.size()))
    throw std::invalid_argument(
        "chaos_vector_bound: covariance dimension != kernel count");
  if (level < 1 || level > 3)
    throw std::invalid_argument("chaos_vector_bound: level must be 1, 2 or 3");
  if (!is_nonneg_definite(C))
    throw std::invalid_argument(
        "chaos_vector_bound: target covariance must be nonnegative definite");

  DistanceBound out;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    for (std::size_t j = 0; j < fs.size(); ++j) {
      const PairTermBounds b = pair_term_bounds(
          fs[i], fs[j], C.at(static_cast<int>(i), static_cast<int>(j)));
      out.pairing_gap_sum +=
          level == 1 ? b.exact : (level == 2 ? b.contraction : b.nested);
    }
  }
  bool all_first = true;
  for (const Kernel& f : fs) all_first = all_first && f.order() == 1;
  out.cubic_term =
      all_first ? first_chaos_cubic_exact(fs) : third_moment_term(fs);

  const double root = std::sqrt(out.pairing_gap_sum);
  out.d3 = 0.5 * root + 0.25 * out.cubic_term;
  if (is_pos_definite(C)) {
    const SteinConstants k = d2_constants(C);
    out.d2 = k.quad * root + k.cubic * out.cubic_term;
    out.d2_valid = true;
  }
  return out;
}

FirstChaosBound first_chaos_bound(const std::vector<Kernel>& hs,
                                  const SymMatrix& C) {
  require_single_order_family(hs, "first_chaos_bound");
  require_matrix(C, "first_chaos_bound");
  const int d = static_cast<int>(hs.size());
  if (C.dim != d)
    throw std::invalid_argument(
        "first_chaos_bound: covariance dimension != kernel count");
  for (const Kernel& h : hs)
    if (h.order() != 1)
      throw std::invalid_argument(
          "first_chaos_bound: all kernels must have order 1");
  SymMatrix K{d, std::vector<double>(static_cast<std::size_t>(d) * d, 0.0)};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) K.at(i, j) = inner_product(hs[i], hs[j]);

  FirstChaosBound out;
  out.hs_gap = hs_distance(C, K);
  out.cubic = first_chaos_cubic_exact(hs);
  out.d3 = 0.5 * out.hs_gap + 0.25 * out.cubic;
  if (is_pos_definite(C)) {
    const SteinConstants k = d2_constants(C);
    out.d2 = k.quad * out.hs_gap + k.cubic * out.cubic;
    out.d2_valid = true;
  }
  return out;
}

SingleDoubleBound single_double_bound(const std::vector<Kernel>& gs,
                                      const std::vector<Kernel>& hs,
                                      const SymMatrix& C) {
  if (gs.empty() && hs.empty())
    throw std::invalid_argument("single_double_bound: no kernels");
  const int mm = static_cast<int>(gs.size());
  const int nn = static_cast<int>(hs.size());
  require_matrix(C, "single_double_bound");
  if (C.dim != mm + nn)
    throw std::invalid_argument(
        "single_double_bound: covariance dimension != kernel count");
  const SpacePtr space = mm > 0 ? gs[0].space() : hs[0].space();
  for (const Kernel& g : gs) {
    if (g.order() != 1)
      throw std::invalid_argument(
          "single_double_bound: first block must have order 1");
    if (!same_space(g.space(), space))
      throw std::invalid_argument("single_double_bound: space mismatch");
  }
  for (const Kernel& h : hs) {
    if (h.order() != 2 || !h.symmetric())
      throw std::invalid_argument(
          "single_double_bound: second block must be symmetric order 2");
    if (!same_space(h.space(), space))
      throw std::invalid_argument("single_double_bound: space mismatch");
  }

  // Per-kernel self-contraction norms, computed once. The two-argument
  // norm ||h *_1^0 h|| equals ||h *_2^1 h||, so the cube-sized tensor
  // behind the former is never materialized.
  std::vector<double> self11(nn), self10(nn), self21(nn);
  for (int j = 0; j < nn; ++j) {
    self11[j] = star_norm(hs[j], hs[j], 1, 1);
    self21[j] = star_norm(hs[j], hs[j], 2, 1);
    self10[j] = star_norm(hs[j], hs[j], 1, 0);
  }

  SingleDoubleBound out;
  for (int i1 = 0; i1 < mm; ++i1)
    for (int i2 = 0; i2 < mm; ++i2) {
      const double gap = C.at(i1, i2) - inner_product(gs[i1], gs[i2]);
      out.s1 += gap * gap;
    }

  for (int j1 = 0; j1 < nn; ++j1) {
    for (int j2 = 0; j2 < nn; ++j2) {
      const double gap =
          C.at(mm + j1, mm + j2) - 2.0 * inner_product(hs[j1], hs[j2]);
      const double cross21 =
          j1 == j2 ? self21[j1] : star_norm(hs[j1], hs[j2], 2, 1);
      const double cross11 =
          j1 == j2 ? self11[j1] : star_norm(hs[j1], hs[j2], 1, 1);
      out.s2 += gap * gap + 4.0 * cross21 * cross21 + 8.0 * cross11 * cross11;
      out.s5 += gap * gap + 4.0 * self10[j1] * self10[j2] +
                8.0 * self11[j1] * self11[j2];
    }
  }

  for (int i = 0; i < mm; ++i) {
    const double g_norm = l2_norm(gs[i]);
    for (int j = 0; j < nn; ++j) {
      const double c2 = C.at(i, mm + j) * C.at(i, mm + j);
      const double cross = star_norm(gs[i], hs[j], 1, 1);
      out.s3 += 2.0 * c2 + 5.0 * cross * cross;
      out.s6 += 2.0 * c2 + 5.0 * g_norm * g_norm * self11[j];
    }
  }

  for (int i = 0; i < mm; ++i) {
    const double n3 = lp_norm(gs[i], 3.0);
    out.s4 += static_cast<double>(mm) * mm * n3 * n3 * n3;
  }
  for (int j = 0; j < nn; ++j) {
    const double l4 = lp_norm(hs[j], 4.0);
    out.s4 += 8.0 * static_cast<double>(nn) * nn * l2_norm(hs[j]) *
              (l4 * l4 + std::sqrt(2.0) * self21[j]);
  }

  out.d3_contraction = 0.5 * std::sqrt(out.s1 + out.s2 + out.s3) + out.s4;
  out.d3_nested = 0.5 * std::sqrt(out.s1 + out.s5 + out.s6) + out.s4;
  return out;
}

double gaussian_pair_bound(const SymMatrix& C, const SymMatrix& K) {
  require_matrix(C, "gaussian_pair_bound");
  require_matrix(K, "gaussian_pair_bound");
  if (C.dim != K.dim)
    throw std::invalid_argument("gaussian_pair_bound: dimension mismatch");
  double best = std::numeric_limits<double>::infinity();
  for (const SymMatrix* M : {&C, &K}) {
    if (!is_pos_definite(*M)) continue;
    const std::vector<double> eig = jacobi_eigenvalues(*M);
    best = std::min(best, (1.0 / eig.front()) * std::sqrt(eig.back()));
  }
  if (!std::isfinite(best))
    throw std::invalid_argument(
        "gaussian_pair_bound: neither covariance is positive definite");
  return best * hs_distance(C, K);
}

CltChecks clt_checks(const Kernel& f) {
  if (f.order() < 1)
    throw std::invalid_argument("clt_checks: order must be >= 1");
  if (!f.symmetric())
    throw std::invalid_argument("clt_checks: kernel must be symmetric");
  CltChecks out;
  const int q = f.order();
  for (int r = 1; r <= q; ++r)
    for (int l = 1; l <= std::min(r, q - 1); ++l)
      out.contraction_norms.push_back({r, l, star_norm(f, f, r, l)});
  const double n4 = lp_norm(f, 4.0);
  out.fourth_moment = n4 * n4 * n4 * n4;
  return out;
}

SymMatrix chaos_covariance(const std::vector<Kernel>& fs) {
  require_single_order_family(fs, "chaos_covariance");
  const int d = static_cast<int>(fs.size());
  SymMatrix C{d, std::vector<double>(static_cast<std::size_t>(d) * d, 0.0)};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      C.at(i, j) = fs[i].order() == fs[j].order()
                       ? static_cast<double>(factorial(fs[i].order())) *
                             inner_product(fs[i], fs[j])
                       : 0.0;
  return C;
}

}  // namespace poischaos

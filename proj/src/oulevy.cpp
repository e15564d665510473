#include "poischaos/oulevy.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

#include "poischaos/algebra.hpp"

namespace poischaos::oulevy {

namespace {

void require_lambdas(const std::vector<double>& lambdas) {
  if (lambdas.empty()) {
    throw std::invalid_argument("oulevy: need at least one rate");
  }
  for (double lam : lambdas) {
    if (!(lam > 0.0) || !std::isfinite(lam)) {
      throw std::invalid_argument("oulevy: rates must be positive, got " +
                                  std::to_string(lam));
    }
  }
}

void require_horizon(double T) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw std::invalid_argument("oulevy: horizon must be positive");
  }
}

void require_lag(double h) {
  if (!(h >= 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("oulevy: lag must be nonnegative");
  }
}

int coord_count(const OUConfig& cfg) {
  return static_cast<int>(cfg.lambdas.size());
}

void require_coord(const OUConfig& cfg, int i) {
  if (i < 0 || i >= coord_count(cfg)) {
    throw std::invalid_argument("oulevy: coordinate index out of range");
  }
}

}  // namespace

std::vector<MarkAtom> normalized_atoms(const OUConfig& cfg) {
  if (cfg.atoms.empty()) {
    throw std::invalid_argument("oulevy: mark distribution has no atoms");
  }
  double total = 0.0;
  for (const auto& atom : cfg.atoms) {
    if (!(atom.mass > 0.0) || !std::isfinite(atom.mass) ||
        !std::isfinite(atom.value)) {
      throw std::invalid_argument(
          "oulevy: mark atoms need positive mass and finite values");
    }
    total += atom.mass;
  }
  std::vector<MarkAtom> out = cfg.atoms;
  for (auto& atom : out) atom.mass /= total;
  double second = 0.0;
  for (const auto& atom : out) second += atom.mass * atom.value * atom.value;
  if (!(second > 0.0)) {
    throw std::invalid_argument("oulevy: marks have zero second moment");
  }
  const double scale = 1.0 / std::sqrt(second);
  for (auto& atom : out) atom.value *= scale;
  return out;
}

double OUConfig::cnu2() const {
  double fourth = 0.0;
  for (const auto& atom : normalized_atoms(*this)) {
    const double u2 = atom.value * atom.value;
    fourth += atom.mass * u2 * u2;
  }
  return fourth;
}

OUConfig OUConfig::standard(std::vector<double> lambdas, double T,
                            double points_per_unit) {
  require_lambdas(lambdas);
  require_horizon(T);
  if (!(points_per_unit > 0.0)) {
    throw std::invalid_argument("oulevy: resolution must be positive");
  }
  OUConfig cfg;
  cfg.lambdas = std::move(lambdas);
  cfg.T = T;
  const double lam_min = *std::min_element(cfg.lambdas.begin(),
                                           cfg.lambdas.end());
  cfg.x_min = -20.0 / lam_min;
  cfg.nx = static_cast<std::size_t>(
      std::ceil(points_per_unit * (T - cfg.x_min)));
  cfg.atoms = {{1.0, 0.5}, {-1.0, 0.5}};
  return cfg;
}

OUGrid build_grid(const OUConfig& cfg) {
  require_lambdas(cfg.lambdas);
  require_horizon(cfg.T);
  require_lag(cfg.h);
  if (!(cfg.x_min < 0.0)) {
    throw std::invalid_argument(
        "oulevy: truncation point must be negative to cover the stationary "
        "past");
  }
  if (cfg.nx == 0) {
    throw std::invalid_argument("oulevy: grid needs at least one x cell");
  }
  const double lam_min = *std::min_element(cfg.lambdas.begin(),
                                           cfg.lambdas.end());
  // Mass of the squared kernel tail dropped by the truncation; keep it
  // far below quadrature error.
  if (std::exp(2.0 * lam_min * cfg.x_min) > 1e-8) {
    throw std::invalid_argument(
        "oulevy: truncation point leaves more than 1e-8 of tail mass; "
        "lower x_min");
  }
  const auto atoms = normalized_atoms(cfg);

  OUGrid grid;
  grid.nx = cfg.nx;
  grid.natoms = atoms.size();
  grid.dx = (cfg.T - cfg.x_min) / static_cast<double>(cfg.nx);
  const std::size_t m = grid.nx * grid.natoms;
  std::vector<double> weights(m);
  grid.x_mid.resize(m);
  grid.u_val.resize(m);
  for (std::size_t ix = 0; ix < grid.nx; ++ix) {
    const double x = cfg.x_min + (static_cast<double>(ix) + 0.5) * grid.dx;
    for (std::size_t ia = 0; ia < grid.natoms; ++ia) {
      const std::size_t cell = ix * grid.natoms + ia;
      weights[cell] = atoms[ia].mass * grid.dx;
      grid.x_mid[cell] = x;
      grid.u_val[cell] = atoms[ia].value;
    }
  }
  grid.space = DiscreteSpace::create(std::move(weights));
  return grid;
}

double a_formula(double lambda, double T, double x) {
  const double start = std::max(x, 0.0);
  return std::sqrt(2.0 * lambda / T) / lambda *
         (std::exp(-lambda * (start - x)) - std::exp(-lambda * (T - x)));
}

double q_mean_formula(double lambda, double T, double x) {
  if (x <= 0.0) {
    return std::exp(lambda * (2.0 * x)) * (-std::expm1(-2.0 * lambda * T)) /
           T;
  }
  return -std::expm1(-2.0 * lambda * (T - x)) / T;
}

double q_quad_formula(double lambda, double T, double x, double xp) {
  if (std::max(x, xp) <= 0.0) {
    return std::exp(lambda * (x + xp)) * (-std::expm1(-2.0 * lambda * T)) /
           T;
  }
  return (std::exp(-lambda * std::abs(x - xp)) -
          std::exp(lambda * (x + xp - 2.0 * T))) /
         T;
}

double qh_mean_formula(double lambda, double T, double h, double x) {
  if (x <= 0.0) {
    return std::exp(lambda * (2.0 * x - h)) *
           (-std::expm1(-2.0 * lambda * T)) / T;
  }
  return std::exp(-lambda * h) * (-std::expm1(-2.0 * lambda * (T - x))) / T;
}

double qh_quad_formula(double lambda, double T, double h, double x,
                       double xp) {
  if (std::max(x, xp - h) <= 0.0) {
    return std::exp(lambda * (x + xp - h)) *
           (-std::expm1(-2.0 * lambda * T)) / T;
  }
  return (std::exp(-lambda * std::abs(x - xp + h)) -
          std::exp(lambda * (x + xp - h - 2.0 * T))) /
         T;
}

Kernel kernel_A(const OUGrid& grid, double lambda, double T) {
  const std::size_t m = grid.space->size();
  std::vector<double> values(m);
  for (std::size_t c = 0; c < m; ++c) {
    values[c] = grid.u_val[c] * a_formula(lambda, T, grid.x_mid[c]);
  }
  return Kernel(grid.space, 1, std::move(values), true);
}

std::pair<Kernel, Kernel> kernel_Q(const OUGrid& grid, double lambda,
                                   double T) {
  const std::size_t m = grid.space->size();
  const double root_t = std::sqrt(T);
  std::vector<double> mean(m);
  for (std::size_t c = 0; c < m; ++c) {
    const double u = grid.u_val[c];
    mean[c] = u * u * root_t * q_mean_formula(lambda, T, grid.x_mid[c]);
  }
  std::vector<double> quad(m * m);
  for (std::size_t c = 0; c < m; ++c) {
    const double u = grid.u_val[c];
    const double x = grid.x_mid[c];
    for (std::size_t cp = 0; cp < m; ++cp) {
      quad[c * m + cp] = u * grid.u_val[cp] * root_t *
                         q_quad_formula(lambda, T, x, grid.x_mid[cp]);
    }
  }
  return {Kernel(grid.space, 1, std::move(mean), true),
          Kernel(grid.space, 2, std::move(quad), true)};
}

std::pair<Kernel, Kernel> kernel_Qh(const OUGrid& grid, double lambda,
                                    double T, double h) {
  require_lag(h);
  const std::size_t m = grid.space->size();
  const double root_t = std::sqrt(T);
  std::vector<double> mean(m);
  for (std::size_t c = 0; c < m; ++c) {
    const double u = grid.u_val[c];
    mean[c] = u * u * root_t * qh_mean_formula(lambda, T, h, grid.x_mid[c]);
  }
  std::vector<double> quad(m * m);
  for (std::size_t c = 0; c < m; ++c) {
    const double u = grid.u_val[c];
    const double x = grid.x_mid[c];
    for (std::size_t cp = 0; cp < m; ++cp) {
      quad[c * m + cp] = u * grid.u_val[cp] * root_t *
                         qh_quad_formula(lambda, T, h, x, grid.x_mid[cp]);
    }
  }
  Kernel second = symmetrize(Kernel(grid.space, 2, std::move(quad)));
  second.set_symmetric(true);
  return {Kernel(grid.space, 1, std::move(mean), true), std::move(second)};
}

namespace {

double cov_a_exact(double li, double lj, double T) {
  const double s = li + lj;
  const double ei = -std::expm1(-li * T);
  const double ej = -std::expm1(-lj * T);
  const double eij = -std::expm1(-s * T);
  return (2.0 / (T * std::sqrt(li * lj))) *
         (ei * ej / s + T - ei / li - ej / lj + eij / s);
}

// Covariance of the order-1 parts of Q for rates li, lj.
double cov_q_mean_exact(double li, double lj, double T, double cnu2) {
  const double s = li + lj;
  const double di = -std::expm1(-2.0 * li * T);
  const double dj = -std::expm1(-2.0 * lj * T);
  const double dij = -std::expm1(-2.0 * s * T);
  return (cnu2 / T) * (di * dj / (2.0 * s) + T - di / (2.0 * li) -
                       dj / (2.0 * lj) + dij / (2.0 * s));
}

// Covariance of the order-2 parts of Q for rates li, lj.
double cov_q_quad_exact(double li, double lj, double T) {
  const double s = li + lj;
  const double di = -std::expm1(-2.0 * li * T);
  const double dj = -std::expm1(-2.0 * lj * T);
  const double dij = -std::expm1(-2.0 * s * T);
  return (2.0 / T) * (di * dj / (s * s) +
                      (2.0 / s) * (T - di / (2.0 * li) - dj / (2.0 * lj) +
                                   dij / (2.0 * s)));
}

}  // namespace

double cov_exact(const OUConfig& cfg, Functional which, int i, int j) {
  require_coord(cfg, i);
  require_coord(cfg, j);
  require_horizon(cfg.T);
  const double li = cfg.lambdas[static_cast<std::size_t>(i)];
  const double lj = cfg.lambdas[static_cast<std::size_t>(j)];
  switch (which) {
    case Functional::A:
      return cov_a_exact(li, lj, cfg.T);
    case Functional::Q:
      return cov_q_mean_exact(li, lj, cfg.T, cfg.cnu2()) +
             cov_q_quad_exact(li, lj, cfg.T);
    case Functional::Qh:
      require_lag(cfg.h);
      return std::exp(-(li + lj) * cfg.h) *
                 cov_q_mean_exact(li, lj, cfg.T, cfg.cnu2()) +
             cov_q_quad_exact(li, lj, cfg.T);
  }
  throw std::invalid_argument("oulevy: unknown functional");
}

SymMatrix cov_limit(const OUConfig& cfg, Functional which) {
  require_lambdas(cfg.lambdas);
  const int d = coord_count(cfg);
  const double cnu2 = cfg.cnu2();
  std::vector<double> a(static_cast<std::size_t>(d) *
                        static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double li = cfg.lambdas[static_cast<std::size_t>(i)];
      const double lj = cfg.lambdas[static_cast<std::size_t>(j)];
      double v = 0.0;
      switch (which) {
        case Functional::A:
          v = 2.0 / std::sqrt(li * lj);
          break;
        case Functional::Q:
          v = 4.0 / (li + lj) + cnu2;
          break;
        case Functional::Qh:
          require_lag(cfg.h);
          v = 4.0 / (li + lj) + cnu2 * std::exp(-(li + lj) * cfg.h);
          break;
      }
      a[static_cast<std::size_t>(i * d + j)] = v;
    }
  }
  return make_sym_matrix(d, std::move(a));
}

namespace {

// Builds the split-vector covariance (order-1 coordinates first, then
// order-2) from per-pair entries for the two diagonal blocks; cross terms
// between the chaos levels vanish.
SymMatrix split_cov(const OUConfig& cfg, bool exact, Functional which) {
  const int d = coord_count(cfg);
  const double cnu2 = cfg.cnu2();
  const int n = 2 * d;
  std::vector<double> a(static_cast<std::size_t>(n) *
                        static_cast<std::size_t>(n),
                        0.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double li = cfg.lambdas[static_cast<std::size_t>(i)];
      const double lj = cfg.lambdas[static_cast<std::size_t>(j)];
      const double lag = which == Functional::Qh
                             ? std::exp(-(li + lj) * cfg.h)
                             : 1.0;
      const double top =
          exact ? lag * cov_q_mean_exact(li, lj, cfg.T, cnu2) : lag * cnu2;
      const double bottom =
          exact ? cov_q_quad_exact(li, lj, cfg.T) : 4.0 / (li + lj);
      a[static_cast<std::size_t>(i * n + j)] = top;
      a[static_cast<std::size_t>((d + i) * n + (d + j))] = bottom;
    }
  }
  return make_sym_matrix(n, std::move(a));
}

SymMatrix plain_cov_exact(const OUConfig& cfg, Functional which) {
  const int d = coord_count(cfg);
  std::vector<double> a(static_cast<std::size_t>(d) *
                        static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      a[static_cast<std::size_t>(i * d + j)] = cov_exact(cfg, which, i, j);
    }
  }
  return make_sym_matrix(d, std::move(a));
}

}  // namespace

SymMatrix block_cov_exact(const OUConfig& cfg, Functional which) {
  require_lambdas(cfg.lambdas);
  require_horizon(cfg.T);
  if (which == Functional::A) return plain_cov_exact(cfg, which);
  return split_cov(cfg, true, which);
}

SymMatrix block_cov_limit(const OUConfig& cfg, Functional which) {
  require_lambdas(cfg.lambdas);
  if (which == Functional::A) return cov_limit(cfg, which);
  return split_cov(cfg, false, which);
}

double fit_loglog_slope(const std::vector<double>& xs,
                        const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("fit_loglog_slope: need matched samples");
  }
  std::vector<double> lx(xs.size()), ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw std::invalid_argument("fit_loglog_slope: samples must be "
                                  "positive");
    }
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) {
    throw std::invalid_argument("fit_loglog_slope: degenerate abscissae");
  }
  return sxy / sxx;
}

RateTable rate_experiment(const OUConfig& base,
                          const std::vector<double>& t_grid,
                          double points_per_unit) {
  require_lambdas(base.lambdas);
  require_lag(base.h);
  if (t_grid.size() < 2) {
    throw std::invalid_argument("rate_experiment: need at least two "
                                "horizons");
  }
  if (!(points_per_unit > 0.0)) {
    throw std::invalid_argument("rate_experiment: resolution must be "
                                "positive");
  }
  const double lam = base.lambdas[0];

  RateTable table;
  table.points.reserve(t_grid.size());
  for (double t : t_grid) {
    require_horizon(t);
    OUConfig cfg = base;
    cfg.lambdas = {lam};
    cfg.T = t;
    cfg.nx = static_cast<std::size_t>(
        std::ceil(points_per_unit * (t - cfg.x_min)));
    const OUGrid grid = build_grid(cfg);
    auto [k1, k2] = kernel_Qh(grid, lam, t, cfg.h);

    RatePoint pt;
    pt.T = t;
    pt.cells = grid.space->size();
    const double l3 = lp_norm(k1, 3.0);
    pt.mean_l3 = l3 * l3 * l3;
    const double l4 = lp_norm(k2, 4.0);
    pt.quad_l4 = l4 * l4;
    pt.contract21 = star_norm(k2, k2, 2, 1);
    pt.contract11 = star_norm(k2, k2, 1, 1);
    pt.cross11 = star_norm(k1, k2, 1, 1);
    pt.d3 = single_double_bound({k1}, {k2},
                                block_cov_limit(cfg, Functional::Qh))
                .d3_contraction;
    table.points.push_back(pt);
  }

  std::vector<double> ts;
  ts.reserve(table.points.size());
  for (const auto& pt : table.points) ts.push_back(pt.T);
  const auto column = [&](double RatePoint::* field) {
    std::vector<double> ys;
    ys.reserve(table.points.size());
    for (const auto& pt : table.points) ys.push_back(pt.*field);
    // Symmetric marks annihilate some norms identically (the mixed
    // order-1/order-2 contraction carries the third mark moment); a decay
    // slope has no meaning there.
    for (double y : ys) {
      if (!(y > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    }
    return fit_loglog_slope(ts, ys);
  };
  table.slope_mean_l3 = column(&RatePoint::mean_l3);
  table.slope_quad_l4 = column(&RatePoint::quad_l4);
  table.slope_contract21 = column(&RatePoint::contract21);
  table.slope_contract11 = column(&RatePoint::contract11);
  table.slope_cross11 = column(&RatePoint::cross11);
  table.slope_d3 = column(&RatePoint::d3);
  return table;
}

DemoKit build_demo(const OUConfig& cfg, Functional which) {
  DemoKit kit;
  kit.grid = build_grid(cfg);
  for (double lam : cfg.lambdas) {
    switch (which) {
      case Functional::A:
        kit.order1.push_back(kernel_A(kit.grid, lam, cfg.T));
        break;
      case Functional::Q: {
        auto [k1, k2] = kernel_Q(kit.grid, lam, cfg.T);
        kit.order1.push_back(std::move(k1));
        kit.order2.push_back(std::move(k2));
        break;
      }
      case Functional::Qh: {
        auto [k1, k2] = kernel_Qh(kit.grid, lam, cfg.T, cfg.h);
        kit.order1.push_back(std::move(k1));
        kit.order2.push_back(std::move(k2));
        break;
      }
    }
  }
  kit.exact_cov = block_cov_exact(cfg, which);
  kit.limit_cov = block_cov_limit(cfg, which);
  return kit;
}

}  // namespace poischaos::oulevy

#include "poischaos/space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace poischaos {

std::uint64_t factorial(int n) {
  if (n < 0 || n > 20) throw std::invalid_argument("factorial: n out of range");
  std::uint64_t r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    // exact for the n <= 62 range used here
    r = r * (n - k + i) / i;
  }
  return r;
}

std::shared_ptr<const DiscreteSpace> DiscreteSpace::create(
    std::vector<double> weights, std::vector<std::string> labels) {
  if (weights.empty())
    throw std::invalid_argument("space: weights must be nonempty");
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument(
          "space: weights must be strictly positive and finite");
  if (!labels.empty() && labels.size() != weights.size())
    throw std::invalid_argument("space: labels must be empty or one per cell");
  auto s = std::make_shared<DiscreteSpace>();
  s->weights = std::move(weights);
  s->labels = std::move(labels);
  return s;
}

bool same_space(const SpacePtr& a, const SpacePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return a->weights == b->weights;
}

Kernel::Kernel(SpacePtr space, int order, std::vector<double> values,
               bool symmetric)
    : space_(std::move(space)), order_(order), values_(std::move(values)),
      symmetric_(symmetric) {
  if (!space_) throw std::invalid_argument("kernel: null space");
  if (order_ < 0 || order_ > kMaxKernelOrder)
    throw std::invalid_argument("kernel: order must be in [0, 6], got " +
                                std::to_string(order_));
  const std::size_t expect = pow_size(space_->size(), order_);
  if (expect > std::size_t(250'000'000))
    throw guard_error("kernel: m^order exceeds the dense-storage budget");
  if (values_.size() != expect)
    throw std::invalid_argument(
        "kernel: values has length " + std::to_string(values_.size()) +
        ", expected m^order = " + std::to_string(expect));
  if (order_ <= 1) symmetric_ = true;
}

Kernel Kernel::zero(SpacePtr space, int order) {
  const std::size_t n = pow_size(space->size(), order);
  return Kernel(std::move(space), order, std::vector<double>(n, 0.0), true);
}

Kernel Kernel::constant(SpacePtr space, double value) {
  return Kernel(std::move(space), 0, {value}, true);
}

Kernel Kernel::ones(SpacePtr space, int order) {
  const std::size_t n = pow_size(space->size(), order);
  return Kernel(std::move(space), order, std::vector<double>(n, 1.0), true);
}

double Kernel::value_at(const std::vector<std::size_t>& idx) const {
  if (static_cast<int>(idx.size()) != order_)
    throw std::invalid_argument("kernel: index tuple has wrong length");
  const std::size_t m = space_->size();
  std::size_t flat = 0;
  for (std::size_t i : idx) {
    if (i >= m) throw std::invalid_argument("kernel: cell index out of range");
    flat = flat * m + i;
  }
  return values_[flat];
}

namespace {

// Contracts the last axis of a length m^p value array against the cell
// weights, yielding m^(p-1) entries. Summation order over the axis is fixed,
// so results do not depend on threading.
std::vector<double> fold_last_axis(const std::vector<double>& vals,
                                   std::size_t m, int p,
                                   const std::vector<double>& w) {
  const std::size_t rows = vals.size() / m;
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* v = vals.data() + r * m;
    for (std::size_t j = 0; j < m; ++j) acc += v[j] * w[j];
    out[r] = acc;
  }
  (void)p;
  return out;
}

void require_compatible(const Kernel& f, const Kernel& g, const char* op) {
  if (f.order() != g.order())
    throw std::invalid_argument(std::string(op) + ": kernel orders differ (" +
                                std::to_string(f.order()) + " vs " +
                                std::to_string(g.order()) + ")");
  if (!same_space(f.space(), g.space()))
    throw std::invalid_argument(std::string(op) +
                                ": kernels live on different spaces");
}

}  // namespace

double integrate(const Kernel& f) {
  if (f.order() == 0) return f.values()[0];
  const auto& w = f.space()->weights;
  std::vector<double> cur = f.values();
  for (int p = f.order(); p > 0; --p)
    cur = fold_last_axis(cur, w.size(), p, w);
  return cur[0];
}

double inner_product(const Kernel& f, const Kernel& g) {
  require_compatible(f, g, "inner_product");
  if (f.order() == 0) return f.values()[0] * g.values()[0];
  const auto& w = f.space()->weights;
  const std::size_t m = w.size();
  // First fold fuses the pointwise product with the innermost axis; the
  // remaining folds are plain weight contractions.
  const std::size_t rows = f.values().size() / m;
  std::vector<double> cur(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* a = f.values().data() + r * m;
    const double* b = g.values().data() + r * m;
    for (std::size_t j = 0; j < m; ++j) acc += a[j] * b[j] * w[j];
    cur[r] = acc;
  }
  for (int p = f.order() - 1; p > 0; --p) cur = fold_last_axis(cur, m, p, w);
  return cur[0];
}

double lp_norm(const Kernel& f, double exponent) {
  if (!(exponent >= 1.0))
    throw std::invalid_argument("lp_norm: exponent must be >= 1");
  if (f.order() == 0) return std::fabs(f.values()[0]);
  const auto& w = f.space()->weights;
  const std::size_t m = w.size();
  const std::size_t rows = f.values().size() / m;
  std::vector<double> cur(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* a = f.values().data() + r * m;
    for (std::size_t j = 0; j < m; ++j)
      acc += std::pow(std::fabs(a[j]), exponent) * w[j];
    cur[r] = acc;
  }
  for (int p = f.order() - 1; p > 0; --p) cur = fold_last_axis(cur, m, p, w);
  return std::pow(cur[0], 1.0 / exponent);
}

double l2_norm(const Kernel& f) { return lp_norm(f, 2.0); }

Kernel slice(const Kernel& f, std::size_t cell) {
  if (f.order() == 0)
    throw std::invalid_argument("slice: cannot slice an order-0 kernel");
  const std::size_t m = f.cell_count();
  if (cell >= m)
    throw std::invalid_argument("slice: cell " + std::to_string(cell) +
                                " out of range (m = " + std::to_string(m) +
                                ")");
  const std::size_t block = f.values().size() / m;
  std::vector<double> vals(f.values().begin() + cell * block,
                           f.values().begin() + (cell + 1) * block);
  return Kernel(f.space(), f.order() - 1, std::move(vals), f.symmetric());
}

bool check_symmetric(const Kernel& f, double tol) {
  const int p = f.order();
  if (p <= 1) return true;
  const std::size_t m = f.cell_count();
  std::vector<std::size_t> idx(p, 0), perm(p);
  const std::size_t total = f.values().size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    // compare against the sorted representative only
    perm.assign(idx.begin(), idx.end());
    std::sort(perm.begin(), perm.end());
    std::size_t rep = 0;
    for (std::size_t i : perm) rep = rep * m + i;
    const double a = f.values()[flat];
    const double b = f.values()[rep];
    if (tol == 0.0 ? a != b : std::fabs(a - b) > tol) return false;
    for (int d = p - 1; d >= 0; --d) {
      if (++idx[d] < m) break;
      idx[d] = 0;
    }
  }
  return true;
}

Kernel parse_kernel(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  for (const char* field : {"m", "weights", "order", "values"})
    if (!j.contains(field))
      throw std::invalid_argument(std::string("kernel file: missing field '") +
                                  field + "'");
  const std::size_t m = j["m"].get<std::size_t>();
  auto weights = j["weights"].get<std::vector<double>>();
  if (weights.size() != m)
    throw std::invalid_argument("kernel file: weights length != m");
  std::vector<std::string> labels;
  if (j.contains("labels")) labels = j["labels"].get<std::vector<std::string>>();
  auto space = DiscreteSpace::create(std::move(weights), std::move(labels));
  const int order = j["order"].get<int>();
  auto values = j["values"].get<std::vector<double>>();
  Kernel k(space, order, std::move(values));
  k.set_symmetric(check_symmetric(k));
  return k;
}

std::string serialize_kernel(const Kernel& f) {
  nlohmann::json j;
  j["m"] = f.cell_count();
  j["weights"] = f.space()->weights;
  if (!f.space()->labels.empty()) j["labels"] = f.space()->labels;
  j["order"] = f.order();
  j["values"] = f.values();
  return j.dump(2);
}

Kernel load_kernel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open kernel file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_kernel(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("kernel file " + path + ": " + e.what());
  }
}

void save_kernel(const Kernel& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write kernel file: " + path);
  out << serialize_kernel(f) << "\n";
}

}  // namespace poischaos

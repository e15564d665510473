#include "poischaos/chaos.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "poischaos/algebra.hpp"

namespace fs = std::filesystem;

namespace poischaos {

namespace {

void require_expansion(const ChaosExpansion& F, const char* op) {
  if (!F.space) throw std::invalid_argument(std::string(op) + ": null space");
  for (std::size_t i = 0; i < F.kernels.size(); ++i) {
    const Kernel& k = F.kernels[i];
    if (k.order() != static_cast<int>(i) + 1)
      throw std::invalid_argument(std::string(op) + ": kernel at slot " +
                                  std::to_string(i) + " has order " +
                                  std::to_string(k.order()));
    if (!same_space(k.space(), F.space))
      throw std::invalid_argument(std::string(op) +
                                  ": kernel space mismatch");
    if (!k.symmetric())
      throw std::invalid_argument(std::string(op) + ": order-" +
                                  std::to_string(k.order()) +
                                  " kernel is not symmetric");
  }
}

// Fetches the order-k kernel slot, growing with zero kernels as needed.
Kernel& kernel_slot(ChaosExpansion& F, int k) {
  while (F.max_order() < k) {
    Kernel z = Kernel::zero(F.space, F.max_order() + 1);
    z.set_symmetric(true);
    F.kernels.push_back(std::move(z));
  }
  return F.kernels[k - 1];
}

void add_into(Kernel& acc, const Kernel& term, double c) {
  std::vector<double>& a = acc.values();
  const std::vector<double>& t = term.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += c * t[i];
}

}  // namespace

ChaosExpansion make_expansion(SpacePtr space, double mean,
                              std::vector<Kernel> kernels) {
  ChaosExpansion F{std::move(space), mean, std::move(kernels)};
  require_expansion(F, "make_expansion");
  return F;
}

ChaosExpansion expansion_zero(SpacePtr space) {
  return ChaosExpansion{std::move(space), 0.0, {}};
}

void add_scaled_expansion(ChaosExpansion& acc, const ChaosExpansion& term,
                          double c) {
  if (!same_space(acc.space, term.space))
    throw std::invalid_argument("add_scaled_expansion: space mismatch");
  acc.mean += c * term.mean;
  for (int k = 1; k <= term.max_order(); ++k)
    add_into(kernel_slot(acc, k), term.kernel(k), c);
}

DerivativeField derivative(const ChaosExpansion& F) {
  require_expansion(F, "derivative");
  const std::size_t m = F.space->size();
  DerivativeField out{F.space, {}};
  out.at_cell.reserve(m);
  for (std::size_t z = 0; z < m; ++z) {
    ChaosExpansion dz = expansion_zero(F.space);
    for (int k = 1; k <= F.max_order(); ++k) {
      if (k == 1) {
        dz.mean += F.kernel(1).values()[z];
        continue;
      }
      Kernel s = slice(F.kernel(k), z);
      // Slices of symmetric kernels are symmetric in the remaining slots.
      s.set_symmetric(true);
      add_into(kernel_slot(dz, k - 1), s, static_cast<double>(k));
    }
    out.at_cell.push_back(std::move(dz));
  }
  return out;
}

ChaosExpansion ou_generator(const ChaosExpansion& F) {
  require_expansion(F, "ou_generator");
  ChaosExpansion out = expansion_zero(F.space);
  for (int k = 1; k <= F.max_order(); ++k)
    add_into(kernel_slot(out, k), F.kernel(k), -static_cast<double>(k));
  return out;
}

ChaosExpansion pseudo_inverse(const ChaosExpansion& F) {
  require_expansion(F, "pseudo_inverse");
  if (F.mean != 0.0)
    throw std::invalid_argument(
        "pseudo_inverse: expansion must be centered (mean is " +
        std::to_string(F.mean) + ")");
  ChaosExpansion out = expansion_zero(F.space);
  for (int k = 1; k <= F.max_order(); ++k)
    add_into(kernel_slot(out, k), F.kernel(k), -1.0 / k);
  return out;
}

ChaosExpansion divergence(const DerivativeField& u) {
  if (!u.space) throw std::invalid_argument("divergence: null space");
  const std::size_t m = u.space->size();
  if (u.at_cell.size() != m)
    throw std::invalid_argument("divergence: field size != cell count");
  int max_k = 0;
  for (const ChaosExpansion& e : u.at_cell) {
    if (!same_space(e.space, u.space))
      throw std::invalid_argument("divergence: cell expansion space mismatch");
    max_k = std::max(max_k, e.max_order());
  }
  if (max_k + 1 > kMaxKernelOrder)
    throw guard_error("divergence: result order exceeds the kernel cap");

  ChaosExpansion out = expansion_zero(u.space);
  // Cell means form the order-1 kernel of the result.
  {
    std::vector<double> v(m, 0.0);
    for (std::size_t z = 0; z < m; ++z) v[z] = u.at_cell[z].mean;
    Kernel k1(u.space, 1, std::move(v), true);
    add_into(kernel_slot(out, 1), k1, 1.0);
  }
  // Order-k cell kernels stack into an order-(k+1) kernel with the cell
  // argument first, then get symmetrized.
  for (int k = 1; k <= max_k; ++k) {
    const std::size_t tail = pow_size(m, k);
    std::vector<double> v(m * tail, 0.0);
    bool any = false;
    for (std::size_t z = 0; z < m; ++z) {
      const ChaosExpansion& e = u.at_cell[z];
      if (e.max_order() < k) continue;
      const std::vector<double>& src = e.kernel(k).values();
      for (std::size_t j = 0; j < tail; ++j) v[z * tail + j] = src[j];
      any = true;
    }
    if (!any) continue;
    Kernel stacked(u.space, k + 1, std::move(v), false);
    add_into(kernel_slot(out, k + 1), symmetrize(stacked), 1.0);
  }
  return out;
}

ChaosExpansion expansion_product(const ChaosExpansion& F,
                                 const ChaosExpansion& G) {
  require_expansion(F, "expansion_product");
  require_expansion(G, "expansion_product");
  if (!same_space(F.space, G.space))
    throw std::invalid_argument("expansion_product: space mismatch");
  if (F.max_order() + G.max_order() > kMaxKernelOrder)
    throw guard_error(
        "expansion_product: product order exceeds the kernel cap");

  ChaosExpansion out = expansion_zero(F.space);
  out.mean = F.mean * G.mean;
  for (int q = 1; q <= G.max_order(); ++q)
    add_into(kernel_slot(out, q), G.kernel(q), F.mean);
  for (int p = 1; p <= F.max_order(); ++p)
    add_into(kernel_slot(out, p), F.kernel(p), G.mean);
  for (int p = 1; p <= F.max_order(); ++p) {
    for (int q = 1; q <= G.max_order(); ++q) {
      const Kernel& f = F.kernel(p);
      const Kernel& g = G.kernel(q);
      if (p == q) out.mean += static_cast<double>(factorial(p)) *
                              inner_product(f, g);
      const int k_lo = std::max(1, std::abs(q - p));
      for (int k = k_lo; k <= p + q; ++k)
        add_into(kernel_slot(out, k), g_operator(f, g, k), 1.0);
    }
  }
  return out;
}

ChaosExpansion malliavin_inner(const ChaosExpansion& F,
                               const ChaosExpansion& G) {
  require_expansion(F, "malliavin_inner");
  require_expansion(G, "malliavin_inner");
  if (!same_space(F.space, G.space))
    throw std::invalid_argument("malliavin_inner: space mismatch");

  // Means drop out: the derivative kills constants, so only the centered
  // parts of F and G contribute.
  ChaosExpansion out = expansion_zero(F.space);
  for (int p = 1; p <= F.max_order(); ++p) {
    for (int q = 1; q <= G.max_order(); ++q) {
      const Kernel& f = F.kernel(p);
      const Kernel& g = G.kernel(q);
      const double lead = static_cast<double>(p);
      if (p == q)
        out.mean += lead * static_cast<double>(factorial(p - 1)) *
                    inner_product(f, g);
      const int k_lo = std::max(1, std::abs(q - p));
      for (int k = k_lo; k <= p + q - 2; ++k)
        add_into(kernel_slot(out, k), g_hat_operator(f, g, k), lead);
    }
  }
  return out;
}

double second_moment(const ChaosExpansion& F) {
  require_expansion(F, "second_moment");
  double s = F.mean * F.mean;
  for (int k = 1; k <= F.max_order(); ++k) {
    const double n = l2_norm(F.kernel(k));
    s += static_cast<double>(factorial(k)) * n * n;
  }
  return s;
}

double product_moment(const ChaosExpansion& F, const ChaosExpansion& G) {
  require_expansion(F, "product_moment");
  require_expansion(G, "product_moment");
  if (!same_space(F.space, G.space))
    throw std::invalid_argument("product_moment: space mismatch");
  double s = F.mean * G.mean;
  const int kmax = std::min(F.max_order(), G.max_order());
  for (int k = 1; k <= kmax; ++k)
    s += static_cast<double>(factorial(k)) *
         inner_product(F.kernel(k), G.kernel(k));
  return s;
}

ChaosExpansion load_expansion(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  if (!j.contains("mean") || !j.contains("kernel_files"))
    throw std::invalid_argument(path +
                                ": expansion needs mean and kernel_files");
  const double mean = j.at("mean").get<double>();
  const auto files = j.at("kernel_files").get<std::vector<std::string>>();
  if (files.size() > static_cast<std::size_t>(kMaxUserExpansionOrder))
    throw std::invalid_argument(
        path + ": at most " + std::to_string(kMaxUserExpansionOrder) +
        " kernels per expansion");
  const fs::path dir = fs::path(path).parent_path();
  std::vector<Kernel> kernels;
  SpacePtr space;
  for (std::size_t i = 0; i < files.size(); ++i) {
    Kernel k = load_kernel((dir / files[i]).string());
    if (k.order() != static_cast<int>(i) + 1)
      throw std::invalid_argument(path + ": kernel " + files[i] +
                                  " has order " + std::to_string(k.order()) +
                                  ", expected " + std::to_string(i + 1));
    if (!k.symmetric())
      throw std::invalid_argument(path + ": kernel " + files[i] +
                                  " is not symmetric");
    if (!space)
      space = k.space();
    else if (!same_space(space, k.space()))
      throw std::invalid_argument(path + ": kernels on different spaces");
    kernels.push_back(std::move(k));
  }
  if (!space)
    throw std::invalid_argument(path + ": expansion has no kernels");
  // Rebuild on the shared space pointer so same_space stays cheap.
  return make_expansion(space, mean, std::move(kernels));
}

void save_expansion(const ChaosExpansion& F, const std::string& path,
                    const std::string& kernel_prefix) {
  require_expansion(F, "save_expansion");
  const fs::path dir = fs::path(path).parent_path();
  std::vector<std::string> rel;
  for (int k = 1; k <= F.max_order(); ++k) {
    fs::path kp = kernel_prefix + ".k" + std::to_string(k) + ".json";
    save_kernel(F.kernel(k), kp.string());
    std::error_code ec;
    fs::path r = fs::relative(kp, dir.empty() ? fs::path(".") : dir, ec);
    rel.push_back(ec ? kp.string() : r.string());
  }
  nlohmann::json j;
  j["mean"] = F.mean;
  j["kernel_files"] = rel;
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace poischaos

#include "poischaos/reference.hpp"

#include <algorithm>
#include <numeric>

namespace poischaos::ref {

namespace {

bool advance(std::vector<std::size_t>& idx, std::size_t m) {
  for (int d = static_cast<int>(idx.size()) - 1; d >= 0; --d) {
    if (++idx[d] < m) return true;
    idx[d] = 0;
  }
  return false;
}

}  // namespace

Kernel symmetrize(const Kernel& f) {
  const int p = f.order();
  const std::size_t m = f.cell_count();
  if (p <= 1) {
    Kernel out = f;
    out.set_symmetric(true);
    return out;
  }
  std::vector<double> out(f.values().size(), 0.0);
  std::vector<std::size_t> idx(p, 0);
  std::size_t flat = 0;
  do {
    std::vector<int> pos(p);
    std::iota(pos.begin(), pos.end(), 0);
    double acc = 0.0;
    std::size_t count = 0;
    do {
      std::vector<std::size_t> permuted(p);
      for (int d = 0; d < p; ++d) permuted[d] = idx[pos[d]];
      acc += f.value_at(permuted);
      ++count;
    } while (std::next_permutation(pos.begin(), pos.end()));
    out[flat] = acc / static_cast<double>(count);
    ++flat;
  } while (advance(idx, m));
  return Kernel(f.space(), p, std::move(out), true);
}

Kernel star_contract(const Kernel& f, const Kernel& g, int r, int l) {
  const int p = f.order(), q = g.order();
  if (!(0 <= l && l <= r && r <= std::min(p, q)))
    throw std::invalid_argument("ref::star_contract: invalid (r, l)");
  const std::size_t m = f.cell_count();
  const auto& w = f.space()->weights;
  const int n_out = p + q - r - l;
  std::vector<double> out;
  out.reserve(pow_size(m, n_out));
  std::vector<std::size_t> oidx(n_out, 0);
  const bool empty_out = n_out == 0;
  do {
    // output tuple = (shared, from-f, from-g)
    std::vector<std::size_t> shared(oidx.begin(), oidx.begin() + (r - l));
    std::vector<std::size_t> tf(oidx.begin() + (r - l),
                                oidx.begin() + (r - l) + (p - r));
    std::vector<std::size_t> tg(oidx.begin() + (r - l) + (p - r), oidx.end());
    double acc = 0.0;
    std::vector<std::size_t> z(l, 0);
    do {
      double wz = 1.0;
      for (std::size_t c : z) wz *= w[c];
      std::vector<std::size_t> fi;
      fi.insert(fi.end(), z.begin(), z.end());
      fi.insert(fi.end(), shared.begin(), shared.end());
      fi.insert(fi.end(), tf.begin(), tf.end());
      std::vector<std::size_t> gi;
      gi.insert(gi.end(), z.begin(), z.end());
      gi.insert(gi.end(), shared.begin(), shared.end());
      gi.insert(gi.end(), tg.begin(), tg.end());
      acc += wz * f.value_at(fi) * g.value_at(gi);
    } while (l > 0 && advance(z, m));
    out.push_back(acc);
  } while (!empty_out && advance(oidx, m));
  return Kernel(f.space(), n_out, std::move(out));
}

double integrate(const Kernel& f) {
  const int p = f.order();
  if (p == 0) return f.values()[0];
  const std::size_t m = f.cell_count();
  const auto& w = f.space()->weights;
  double acc = 0.0;
  std::vector<std::size_t> idx(p, 0);
  do {
    double wp = 1.0;
    for (std::size_t c : idx) wp *= w[c];
    acc += wp * f.value_at(idx);
  } while (advance(idx, m));
  return acc;
}

double eval_multiple_integral(const Kernel& f,
                              const std::vector<double>& centered) {
  const int p = f.order();
  if (p == 0) return f.values()[0];
  const std::size_t m = f.cell_count();
  double acc = 0.0;
  std::vector<std::size_t> idx(p, 0);
  do {
    bool distinct = true;
    for (int a = 0; a < p && distinct; ++a)
      for (int b = a + 1; b < p; ++b)
        if (idx[a] == idx[b]) {
          distinct = false;
          break;
        }
    if (!distinct) continue;
    double prod = f.value_at(idx);
    for (std::size_t c : idx) prod *= centered[c];
    acc += prod;
  } while (advance(idx, m));
  return acc;
}

}  // namespace poischaos::ref

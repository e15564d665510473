// Times the OpenMP contraction kernels against the serial reference
// implementation on random symmetric inputs and reports the speedup plus
// the largest elementwise disagreement.
//
// Usage: bench-contractions [m] [iters]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "poischaos/algebra.hpp"
#include "poischaos/parallel.hpp"
#include "poischaos/reference.hpp"
#include "poischaos/space.hpp"

using namespace poischaos;
using Clock = std::chrono::steady_clock;

namespace {

Kernel random_symmetric(const SpacePtr& space, int order, std::mt19937& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t n = 1;
  for (int i = 0; i < order; ++i) n *= space->size();
  std::vector<double> values(n);
  for (double& v : values) v = u(gen);
  return symmetrize(Kernel(space, order, std::move(values)));
}

double max_abs_diff(const Kernel& a, const Kernel& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    const double d = std::abs(a.values()[i] - b.values()[i]);
    if (d > worst) worst = d;
  }
  return worst;
}

template <class F>
double time_best_of(int iters, F&& run) {
  double best = 1e300;
  for (int i = 0; i < iters; ++i) {
    const auto t0 = Clock::now();
    run();
    const auto t1 = Clock::now();
    best = std::min(best,
                    std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t m = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 96;
  const int iters = argc > 2 ? std::atoi(argv[2]) : 3;
  if (m == 0 || iters <= 0) {
    std::fprintf(stderr, "usage: bench-contractions [cells] [iters]\n");
    return 2;
  }

  std::vector<double> weights(m);
  std::mt19937 gen(12345);
  std::uniform_real_distribution<double> wdist(0.5, 1.5);
  for (double& w : weights) w = wdist(gen);
  const SpacePtr space = DiscreteSpace::create(std::move(weights));

  std::printf("cells m = %zu, workers = %d, best of %d runs\n", m,
              worker_count(), iters);
  std::printf("%-28s %12s %12s %9s %10s\n", "case", "serial (s)",
              "parallel (s)", "speedup", "max |diff|");

  struct Case {
    const char* name;
    int p, q, r, l;
  };
  const Case cases[] = {
      {"order2 x order2, r=1 l=0", 2, 2, 1, 0},
      {"order2 x order2, r=1 l=1", 2, 2, 1, 1},
      {"order2 x order2, r=2 l=1", 2, 2, 2, 1},
      {"order3 x order2, r=2 l=1", 3, 2, 2, 1},
      {"order3 x order3, r=3 l=2", 3, 3, 3, 2},
  };
  for (const Case& c : cases) {
    const Kernel f = random_symmetric(space, c.p, gen);
    const Kernel g = random_symmetric(space, c.q, gen);
    Kernel out_par = Kernel::zero(space, ContractionSpec{c.p, c.q, c.r,
                                                         c.l}
                                             .result_order());
    Kernel out_ser = out_par;
    const double t_par = time_best_of(
        iters, [&] { out_par = star_contract(f, g, c.r, c.l); });
    const double t_ser = time_best_of(
        iters, [&] { out_ser = ref::star_contract(f, g, c.r, c.l); });
    std::printf("%-28s %12.4f %12.4f %8.2fx %10.2e\n", c.name, t_ser, t_par,
                t_ser / t_par, max_abs_diff(out_par, out_ser));
  }
  return 0;
}

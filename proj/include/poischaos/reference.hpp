#pragma once

#include <vector>

#include "poischaos/space.hpp"

namespace poischaos::ref {

// Plain serial implementations, written with explicit index tuples and no
// stride tricks or threading. They exist as oracles for the production
// kernels and as the baseline in the contraction benchmark; keep them dumb.

Kernel symmetrize(const Kernel& f);
Kernel star_contract(const Kernel& f, const Kernel& g, int r, int l);
double integrate(const Kernel& f);

// Multiple-integral evaluation for one replication: sum of f over index
// tuples with pairwise distinct entries times the centered count at each
// entry. centered[i] = N(i) - w(i).
double eval_multiple_integral(const Kernel& f,
                              const std::vector<double>& centered);

}  // namespace poischaos::ref

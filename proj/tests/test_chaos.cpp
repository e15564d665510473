#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "poischaos/algebra.hpp"
#include "poischaos/chaos.hpp"
#include "poischaos/space.hpp"

using namespace poischaos;

namespace {

SpacePtr space3() { return DiscreteSpace::create({0.5, 1.0, 1.5}); }

Kernel random_symmetric(const SpacePtr& sp, int order, std::mt19937& gen) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::size_t n = 1;
  for (int i = 0; i < order; ++i) n *= sp->size();
  std::vector<double> v(n);
  for (double& x : v) x = u(gen);
  return symmetrize(Kernel(sp, order, std::move(v)));
}

ChaosExpansion random_expansion(const SpacePtr& sp, int max_order,
                                double mean, std::mt19937& gen) {
  std::vector<Kernel> ks;
  for (int k = 1; k <= max_order; ++k) {
    ks.push_back(random_symmetric(sp, k, gen));
  }
  return make_expansion(sp, mean, std::move(ks));
}

void check_expansions_equal(const ChaosExpansion& a, const ChaosExpansion& b,
                            double tol) {
  CHECK(std::abs(a.mean - b.mean) <= tol);
  const int hi = std::max(a.max_order(), b.max_order());
  for (int k = 1; k <= hi; ++k) {
    const Kernel ka = k <= a.max_order() ? a.kernel(k)
                                         : Kernel::zero(a.space, k);
    const Kernel kb = k <= b.max_order() ? b.kernel(k)
                                         : Kernel::zero(b.space, k);
    for (std::size_t i = 0; i < ka.values().size(); ++i) {
      CHECK(std::abs(ka.values()[i] - kb.values()[i]) <= tol);
    }
  }
}

}  // namespace

TEST_CASE("derivative of low-order functionals") {
  auto sp = space3();
  std::mt19937 gen(5);
  const Kernel h = random_symmetric(sp, 1, gen);
  const ChaosExpansion F1 = make_expansion(sp, 0.0, {h});
  const DerivativeField df1 = derivative(F1);
  for (std::size_t z = 0; z < sp->size(); ++z) {
    CHECK(df1.at_cell[z].mean == doctest::Approx(h.values()[z]));
    CHECK(df1.at_cell[z].max_order() == 0);
  }

  const Kernel f2 = random_symmetric(sp, 2, gen);
  const ChaosExpansion F2 =
      make_expansion(sp, 0.0, {Kernel::zero(sp, 1), f2});
  const DerivativeField df2 = derivative(F2);
  for (std::size_t z = 0; z < sp->size(); ++z) {
    REQUIRE(df2.at_cell[z].max_order() == 1);
    const Kernel& slice_kernel = df2.at_cell[z].kernel(1);
    for (std::size_t i = 0; i < sp->size(); ++i) {
      CHECK(slice_kernel.values()[i] ==
            doctest::Approx(2.0 * f2.value_at({z, i})));
    }
  }

  const DerivativeField dc = derivative(make_expansion(sp, 5.0, {}));
  for (const auto& e : dc.at_cell) {
    CHECK(e.mean == 0.0);
    CHECK(e.max_order() == 0);
  }
}

TEST_CASE("generator and pseudo-inverse scale orders correctly") {
  auto sp = space3();
  std::mt19937 gen(9);
  const Kernel h = random_symmetric(sp, 1, gen);
  const ChaosExpansion F = make_expansion(sp, 0.0, {h});
  const ChaosExpansion LF = ou_generator(F);
  for (std::size_t i = 0; i < sp->size(); ++i) {
    CHECK(LF.kernel(1).values()[i] == doctest::Approx(-h.values()[i]));
  }
  CHECK(ou_generator(make_expansion(sp, 5.0, {})).mean == 0.0);

  const Kernel f3 = random_symmetric(sp, 3, gen);
  const ChaosExpansion F3 = make_expansion(
      sp, 0.0, {Kernel::zero(sp, 1), Kernel::zero(sp, 2), f3});
  const ChaosExpansion LF3 = ou_generator(F3);
  for (std::size_t i = 0; i < f3.values().size(); ++i) {
    CHECK(LF3.kernel(3).values()[i] ==
          doctest::Approx(-3.0 * f3.values()[i]));
  }

  const Kernel f2 = random_symmetric(sp, 2, gen);
  const ChaosExpansion F2 =
      make_expansion(sp, 0.0, {Kernel::zero(sp, 1), f2});
  const ChaosExpansion Linv = pseudo_inverse(F2);
  for (std::size_t i = 0; i < f2.values().size(); ++i) {
    CHECK(Linv.kernel(2).values()[i] ==
          doctest::Approx(-0.5 * f2.values()[i]));
  }

  CHECK_THROWS_AS(pseudo_inverse(make_expansion(sp, 1.0, {})),
                  std::invalid_argument);

  // L applied after its pseudo-inverse restores centered expansions.
  for (int trial = 0; trial < 5; ++trial) {
    const ChaosExpansion G = random_expansion(sp, 3, 0.0, gen);
    check_expansions_equal(ou_generator(pseudo_inverse(G)), G, 1e-14);
  }
}

TEST_CASE("divergence of a derivative field recovers the generator") {
  auto sp = space3();
  std::mt19937 gen(13);
  for (int max_order = 1; max_order <= 3; ++max_order) {
    for (int trial = 0; trial < 4; ++trial) {
      const ChaosExpansion F = random_expansion(sp, max_order, 0.7, gen);
      const ChaosExpansion lhs = divergence(derivative(F));
      ChaosExpansion rhs = ou_generator(F);
      for (Kernel& k : rhs.kernels) {
        for (double& v : k.values()) v = -v;
      }
      check_expansions_equal(lhs, rhs, 1e-12);
    }
  }

  // A deterministic field integrates to the first chaos of its values.
  const Kernel h = random_symmetric(sp, 1, gen);
  DerivativeField u;
  u.space = sp;
  for (std::size_t z = 0; z < sp->size(); ++z) {
    u.at_cell.push_back(make_expansion(sp, h.values()[z], {}));
  }
  const ChaosExpansion d = divergence(u);
  REQUIRE(d.max_order() == 1);
  CHECK(d.mean == 0.0);
  for (std::size_t i = 0; i < sp->size(); ++i) {
    CHECK(d.kernel(1).values()[i] == doctest::Approx(h.values()[i]));
  }

  const ChaosExpansion dz = divergence(derivative(make_expansion(sp, 3.0, {})));
  CHECK(dz.mean == 0.0);
  CHECK(second_moment(dz) == 0.0);
}

TEST_CASE("pairing expansion for first-chaos inputs is deterministic") {
  auto sp = space3();
  std::mt19937 gen(21);
  const Kernel f = random_symmetric(sp, 1, gen);
  const Kernel g = random_symmetric(sp, 1, gen);
  const ChaosExpansion P = malliavin_inner(make_expansion(sp, 0.0, {f}),
                                           make_expansion(sp, 0.0, {g}));
  CHECK(P.mean == doctest::Approx(inner_product(f, g)).epsilon(1e-14));
  for (int k = 1; k <= P.max_order(); ++k) {
    CHECK(l2_norm(P.kernel(k)) == 0.0);
  }
}

TEST_CASE("pairing expansion matches the order-1 x order-2 closed form") {
  auto sp = space3();
  std::mt19937 gen(22);
  const Kernel g1 = random_symmetric(sp, 1, gen);
  const Kernel h2 = random_symmetric(sp, 2, gen);
  const ChaosExpansion P = malliavin_inner(
      make_expansion(sp, 0.0, {g1}),
      make_expansion(sp, 0.0, {Kernel::zero(sp, 1), h2}));
  CHECK(P.mean == doctest::Approx(0.0));
  REQUIRE(P.max_order() >= 1);
  const Kernel expect = star_contract(g1, h2, 1, 1);
  for (std::size_t i = 0; i < sp->size(); ++i) {
    CHECK(P.kernel(1).values()[i] ==
          doctest::Approx(expect.values()[i]).epsilon(1e-12));
  }
  for (int k = 2; k <= P.max_order(); ++k) {
    CHECK(l2_norm(P.kernel(k)) == 0.0);
  }
}

TEST_CASE("pairing expansion against the slice-sum oracle") {
  auto sp = space3();
  std::mt19937 gen(27);
  for (int p = 1; p <= 3; ++p) {
    for (int q = 1; q <= 3; ++q) {
      const Kernel f = random_symmetric(sp, p, gen);
      const Kernel g = random_symmetric(sp, q, gen);
      std::vector<Kernel> fk, gk;
      for (int k = 1; k <= p; ++k) {
        fk.push_back(k == p ? f : Kernel::zero(sp, k));
      }
      for (int k = 1; k <= q; ++k) {
        gk.push_back(k == q ? g : Kernel::zero(sp, k));
      }
      const ChaosExpansion F = make_expansion(sp, 0.0, fk);
      const ChaosExpansion G = make_expansion(sp, 0.0, gk);
      const ChaosExpansion got = malliavin_inner(F, G);

      // Independent route: expand p * sum_z w_z I_{p-1}(f(z,.)) I_{q-1}(g(z,.))
      // through the product decomposition of each slice pair.
      ChaosExpansion oracle = expansion_zero(sp);
      for (std::size_t z = 0; z < sp->size(); ++z) {
        const auto parts = product_expand(slice(f, z), slice(g, z));
        for (const auto& [k, kern] : parts) {
          const double c = sp->weights[z] * static_cast<double>(p);
          if (k == 0) {
            oracle.mean += c * kern.values()[0];
          } else {
            std::vector<Kernel> single;
            for (int kk = 1; kk <= k; ++kk) {
              single.push_back(kk == k ? kern : Kernel::zero(sp, kk));
            }
            add_scaled_expansion(oracle, make_expansion(sp, 0.0, single), c);
          }
        }
      }
      check_expansions_equal(got, oracle, 1e-10);

      if (p == q) {
        // The deterministic part of <DF, -DL^{-1}F> is E[F^2].
        const ChaosExpansion self = malliavin_inner(F, F);
        CHECK(self.mean ==
              doctest::Approx(second_moment(F)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("pairing expansion for a single order-2 kernel, term by term") {
  auto sp = space3();
  std::mt19937 gen(33);
  const Kernel f = random_symmetric(sp, 2, gen);
  const ChaosExpansion F =
      make_expansion(sp, 0.0, {Kernel::zero(sp, 1), f});
  const ChaosExpansion P = malliavin_inner(F, F);
  CHECK(P.mean == doctest::Approx(2.0 * inner_product(f, f)));
  const Kernel k1_expect = star_contract(f, f, 2, 1);
  for (std::size_t i = 0; i < sp->size(); ++i) {
    CHECK(P.kernel(1).values()[i] ==
          doctest::Approx(2.0 * k1_expect.values()[i]).epsilon(1e-12));
  }
  const Kernel k2_expect = symmetrize(star_contract(f, f, 1, 1));
  for (std::size_t i = 0; i < k2_expect.values().size(); ++i) {
    CHECK(P.kernel(2).values()[i] ==
          doctest::Approx(2.0 * k2_expect.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("moments by isometry") {
  auto sp = DiscreteSpace::create({1.0, 1.0});
  const Kernel ones(sp, 1, {1.0, 1.0});
  CHECK(second_moment(make_expansion(sp, 0.0, {ones})) ==
        doctest::Approx(2.0));
  CHECK(second_moment(make_expansion(sp, 3.0, {})) == doctest::Approx(9.0));

  auto sp3 = space3();
  std::mt19937 gen(39);
  const Kernel f = random_symmetric(sp3, 2, gen);
  const Kernel g = random_symmetric(sp3, 2, gen);
  const ChaosExpansion F =
      make_expansion(sp3, 0.0, {Kernel::zero(sp3, 1), f});
  const ChaosExpansion G =
      make_expansion(sp3, 0.0, {Kernel::zero(sp3, 1), g});
  CHECK(second_moment(F) == doctest::Approx(2.0 * inner_product(f, f)));
  CHECK(product_moment(F, G) == doctest::Approx(2.0 * inner_product(f, g)));

  const Kernel h = random_symmetric(sp3, 1, gen);
  CHECK(product_moment(make_expansion(sp3, 0.0, {h}), F) ==
        doctest::Approx(0.0));
}

TEST_CASE("expansion products agree with moment bookkeeping") {
  auto sp = space3();
  std::mt19937 gen(43);
  const ChaosExpansion F = random_expansion(sp, 2, 0.3, gen);
  const ChaosExpansion G = random_expansion(sp, 2, -0.8, gen);
  const ChaosExpansion FG = expansion_product(F, G);
  CHECK(FG.mean == doctest::Approx(product_moment(F, G)).epsilon(1e-12));

  const ChaosExpansion big = random_expansion(sp, 4, 0.0, gen);
  CHECK_THROWS_AS(expansion_product(big, big), guard_error);
}

TEST_CASE("expansion file round trip") {
  namespace fs = std::filesystem;
  auto sp = space3();
  std::mt19937 gen(47);
  const ChaosExpansion F = random_expansion(sp, 2, 1.25, gen);
  const fs::path dir = fs::temp_directory_path() / "poischaos_exp";
  fs::create_directories(dir);
  const fs::path manifest = dir / "expansion.json";
  save_expansion(F, manifest.string(), (dir / "expkernel").string());
  const ChaosExpansion back = load_expansion(manifest.string());
  CHECK(back.mean == F.mean);
  REQUIRE(back.max_order() == F.max_order());
  for (int k = 1; k <= F.max_order(); ++k) {
    for (std::size_t i = 0; i < F.kernel(k).values().size(); ++i) {
      CHECK(back.kernel(k).values()[i] == F.kernel(k).values()[i]);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("expansion validation") {
  auto sp = space3();
  std::mt19937 gen(51);
  const Kernel asym(sp, 2,
                    {0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0});
  CHECK_THROWS_AS(
      make_expansion(sp, 0.0, {Kernel::zero(sp, 1), asym}),
      std::invalid_argument);
  // Kernels must appear at their own order's slot.
  CHECK_THROWS_AS(
      make_expansion(sp, 0.0, {random_symmetric(sp, 2, gen)}),
      std::invalid_argument);
}

#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "common.hpp"
#include "ortho/model_core.hpp"
#include "ortho/numeric.hpp"
#include "ortho/rng.hpp"

using namespace ortho;

TEST_SUITE("model_core") {

TEST_CASE("sample space validates its construction arguments") {
  CHECK_THROWS_WITH_AS(SampleSpace({"a"}, {}),
                       doctest::Contains("at least two atoms"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(SampleSpace({"a", "a"}, {}),
                       doctest::Contains("duplicate atom name"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(SampleSpace({"a", ""}, {}),
                       doctest::Contains("non-empty"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(SampleSpace({"a", "b"}, {1.0}),
                       doctest::Contains("expected 2"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(SampleSpace({"a", "b"}, {1.0, 0.0}),
                       doctest::Contains("strictly positive"),
                       std::invalid_argument);
  CHECK_THROWS_AS(SampleSpace({"a", "b"},
                              {1.0, std::numeric_limits<double>::infinity()}),
                  std::invalid_argument);

  const SpacePtr s = SampleSpace::make({"a", "b", "c"});
  CHECK(s->size() == 3);
  CHECK(s->nu() == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(s->index_of("b") == 1);
  CHECK_THROWS_WITH_AS(s->index_of("d"), doctest::Contains("unknown atom"),
                       std::invalid_argument);
}

TEST_CASE("space identity falls back to structural equality") {
  const SpacePtr a = SampleSpace::make({"a", "b"}, {2.0, 1.0});
  const SpacePtr b = SampleSpace::make({"a", "b"}, {2.0, 1.0});
  const SpacePtr c = SampleSpace::make({"a", "b"}, {1.0, 1.0});
  CHECK(a->same_as(*a));
  CHECK(a->same_as(*b));
  CHECK_FALSE(a->same_as(*c));
  CHECK_NOTHROW(require_same_space(a, a));
  CHECK_NOTHROW(require_same_space(a, b));
  CHECK_THROWS_WITH_AS(require_same_space(a, c),
                       doctest::Contains("different sample spaces"),
                       std::invalid_argument);
}

TEST_CASE("functions and distributions validate shape and values") {
  const SpacePtr s = SampleSpace::make({"a", "b"});
  CHECK_THROWS_AS(RealFunction(s, {1.0}), std::invalid_argument);
  CHECK_THROWS_WITH_AS(RealFunction(s, {1.0, std::nan("")}),
                       doctest::Contains("non-finite"), std::invalid_argument);
  CHECK(RealFunction(s, {3.0, -4.0}).sup_norm() == 4.0);

  CHECK_THROWS_WITH_AS(Distribution(s, {1.2, -0.2}),
                       doctest::Contains("negative entry at atom 'b'"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(Distribution(s, {0.7, 0.31}),
                       doctest::Contains("deviates from 1"),
                       std::invalid_argument);
  CHECK(Distribution(s, {0.7, 0.3}).full_support());
  CHECK_FALSE(Distribution(s, {1.0, 0.0}).full_support());

  // Non-counting base measure: mass(i) = p(i) * nu(i).
  const SpacePtr w = SampleSpace::make({"a", "b"}, {2.0, 1.0});
  const Distribution p(w, {0.25, 0.5});
  CHECK(p.mass(0) == 0.5);
  CHECK(p.mass(1) == 0.5);
}

TEST_CASE("expectations and inner products weight by density times measure") {
  const SpacePtr w = SampleSpace::make({"a", "b"}, {2.0, 1.0});
  const Distribution p(w, {0.25, 0.5});
  const RealFunction f(w, {4.0, 2.0});
  const RealFunction g(w, {1.0, -3.0});

  // Hand-checked: E[f] = 4*0.25*2 + 2*0.5*1 = 3, <f,g> = 2 - 3 = -1,
  // ||f|| = sqrt(8 + 2) = sqrt(10).
  CHECK(expectation(p, f) == 3.0);
  CHECK(inner_product(p, f, g) == -1.0);
  CHECK(std::abs(l2_norm(p, f) - 3.1622776601683795) <= 1e-15);

  const Distribution other(testutil::two_atom_space(), {0.5, 0.5});
  CHECK_THROWS_AS(expectation(other, f), std::invalid_argument);
}

TEST_CASE("centering produces a mean-zero score attached to its base") {
  const Distribution base = testutil::two_point();
  const ScoreFunction c = center(base, RealFunction(base.space(), {1.0, 2.0}));
  // mean = 0.7 + 0.6 = 1.3; centered values (-0.3, 0.7).
  CHECK(std::abs(c.fn()[0] - (-0.3)) <= 1e-15);
  CHECK(std::abs(c.fn()[1] - 0.7) <= 1e-15);
  CHECK(std::abs(expectation(base, c.fn())) <= kMeanZeroTol);

  CHECK_THROWS_WITH_AS(
      ScoreFunction(RealFunction(base.space(), {1.0, 0.0}), base),
      doctest::Contains("not mean zero"), std::invalid_argument);
  CHECK_NOTHROW(ScoreFunction(RealFunction(base.space(), {0.15, -0.35}), base));
}

TEST_CASE("hellinger and total variation match hand-computed values") {
  const Distribution p = testutil::two_point();
  const Distribution q(p.space(), {0.5, 0.5});
  CHECK(std::abs(hellinger(p, q) - 0.1452366588341136) <= 1e-15);
  CHECK(hellinger(p, q) == hellinger(q, p));
  CHECK(hellinger(p, p) == 0.0);
  CHECK(std::abs(total_variation(p, q) - 0.4) <= 1e-15);

  // Disjoint supports: the distances reach their extreme values.
  const Distribution d1(p.space(), {1.0, 0.0});
  const Distribution d2(p.space(), {0.0, 1.0});
  CHECK(hellinger(d1, d2) == 1.0);
  CHECK(total_variation(d1, d2) == 2.0);
}

TEST_CASE("total variation is bounded by 2 sqrt(2) times hellinger") {
  for (std::uint64_t i = 0; i < 30; ++i) {
    const std::size_t K = 2 + static_cast<std::size_t>(i % 11);
    std::vector<std::string> atoms;
    for (std::size_t k = 0; k < K; ++k) atoms.push_back("z" + std::to_string(k));
    const SpacePtr space = SampleSpace::make(std::move(atoms));
    rng::SplitMix64 gen(rng::derive(7u, i));
    const Distribution p1 = random_distribution(space, gen);
    const Distribution p2 = random_distribution(space, gen);
    CHECK(total_variation(p1, p2) <=
          2.0 * std::sqrt(2.0) * hellinger(p1, p2) + 1e-12);
  }
}

TEST_CASE("random distributions are reproducible and full support") {
  const SpacePtr space = SampleSpace::make({"a", "b", "c", "d"}, {1.0, 2.0, 1.0, 0.5});
  rng::SplitMix64 g1(42), g2(42), g3(43);
  const Distribution p1 = random_distribution(space, g1);
  const Distribution p2 = random_distribution(space, g2);
  const Distribution p3 = random_distribution(space, g3);
  CHECK(p1.p() == p2.p());
  CHECK(p1.p() != p3.p());
  CHECK(p1.full_support());
  num::Acc mass;
  for (std::size_t i = 0; i < p1.size(); ++i) mass.add(p1.mass(i));
  CHECK(std::abs(mass.value() - 1.0) <= kMassTol);
}

TEST_CASE("random scores are reproducible, mean zero and sup-normalized") {
  const Distribution base = testutil::two_point();
  rng::SplitMix64 g1(42), g2(42);
  const ScoreFunction s1 = random_score(base, g1);
  const ScoreFunction s2 = random_score(base, g2);
  CHECK(s1.fn().values() == s2.fn().values());
  CHECK(std::abs(expectation(base, s1.fn())) <= kMeanZeroTol);
  CHECK(std::abs(s1.sup_norm() - 0.5) <= 1e-12);

  rng::SplitMix64 g3(42);
  const ScoreFunction s3 = random_score(base, g3, 0.25);
  CHECK(std::abs(s3.sup_norm() - 0.25) <= 1e-12);
}

}  // TEST_SUITE

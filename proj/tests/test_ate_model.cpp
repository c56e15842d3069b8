#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"

#include "common.hpp"
#include "ortho/ate_model.hpp"
#include "ortho/errors.hpp"
#include "ortho/estimating_engine.hpp"
#include "ortho/functional_calculus.hpp"
#include "ortho/model_core.hpp"
#include "ortho/model_io.hpp"
#include "ortho/submodel.hpp"

using namespace ortho;
using ate::ATEModel;
using ate::ATESpecData;

namespace {

ATEModel reference_model() { return ATEModel::build(testutil::reference_spec()); }
ATEModel sweep_model() { return ATEModel::build(testutil::sweep_spec()); }

// Joint law of reference_model() in atom order x0.a0.y0 ... x1.a1.y1.
std::vector<double> reference_joint() {
  return {0.2, 0.05, 0.1, 0.15, 0.175, 0.075, 0.025, 0.225};
}

Submodel eta_submodel_from_flat(const ATEModel& model,
                                const std::vector<double>& h) {
  const std::size_t nx = model.nx();
  REQUIRE(h.size() == 3 * nx);
  return ate::eta_coordinate_submodel(
      model, std::vector<double>(h.begin(), h.begin() + nx),
      std::vector<double>(h.begin() + nx, h.begin() + 2 * nx),
      std::vector<double>(h.begin() + 2 * nx, h.end()));
}

const ate::RegularityRow& row_named(const ate::RegularityReport& rep,
                                    const std::string& name) {
  for (const auto& r : rep.rows) {
    if (r.name == name) return r;
  }
  REQUIRE_MESSAGE(false, "missing regularity row " << name);
  return rep.rows.front();
}

// Second-order bias coefficient of the orthogonal estimator along `dir`:
// sum_x P(X=x) hpi(x) (h1(x)/pi(x) + h0(x)/(1-pi(x))).
double quadratic_coefficient(const ATEModel& model, const ate::SweepDirection& d) {
  double c2 = 0.0;
  for (std::size_t x = 0; x < model.nx(); ++x) {
    const double pi = model.truth().pi[x];
    c2 += model.spec().x_probs[x] * d.hpi[x] *
          (d.h1[x] / pi + d.h0[x] / (1.0 - pi));
  }
  return c2;
}

}  // namespace

TEST_SUITE("ate_model") {

TEST_CASE("spec files round-trip through the loader") {
  const testutil::TempFile good(
      "# treatment model\n"
      "x.probs = 0.5 0.5\n"
      "pi = 0.5 0.5\n"
      "y.support = 0 1\n"
      "y.cond.a1 = 0.4 0.6 ; 0.1 0.9\n"
      "y.cond.a0 = 0.8 0.2 ; 0.7 0.3\n"
      "epsilon = 0.25\n"
      "c_y = 1.0\n"
      "sigma2_min = 0.05\n");
  const ATESpecData s = ate::load_ate_spec(good.path());
  CHECK(s.x_probs == std::vector<double>{0.5, 0.5});
  CHECK(s.pi == std::vector<double>{0.5, 0.5});
  CHECK(s.y_support == std::vector<double>{0.0, 1.0});
  REQUIRE(s.y_cond_a1.size() == 2);
  CHECK(s.y_cond_a1[1] == std::vector<double>{0.1, 0.9});
  CHECK(s.y_cond_a0[0] == std::vector<double>{0.8, 0.2});
  REQUIRE(s.epsilon.has_value());
  CHECK(*s.epsilon == 0.25);
  REQUIRE(s.c_y.has_value());
  CHECK(*s.c_y == 1.0);
  REQUIRE(s.sigma2_min.has_value());
  CHECK(*s.sigma2_min == 0.05);

  const testutil::TempFile minimal(
      "x.probs = 1.0\npi = 0.5\ny.support = 0 1\n"
      "y.cond.a1 = 0.4 0.6\ny.cond.a0 = 0.8 0.2\n");
  const ATESpecData t = ate::load_ate_spec(minimal.path());
  CHECK_FALSE(t.epsilon.has_value());
  CHECK_FALSE(t.c_y.has_value());
  CHECK_FALSE(t.sigma2_min.has_value());

  const testutil::TempFile short_pi(
      "x.probs = 0.5 0.5\npi = 0.5\ny.support = 0 1\n"
      "y.cond.a1 = 0.4 0.6 ; 0.1 0.9\ny.cond.a0 = 0.8 0.2 ; 0.7 0.3\n");
  CHECK_THROWS_WITH_AS(ate::load_ate_spec(short_pi.path()),
                       doctest::Contains("expected 2"), ortho::io_error);

  const testutil::TempFile short_row(
      "x.probs = 0.5 0.5\npi = 0.5 0.5\ny.support = 0 1\n"
      "y.cond.a1 = 0.4 0.6 ; 0.1\ny.cond.a0 = 0.8 0.2 ; 0.7 0.3\n");
  CHECK_THROWS_WITH_AS(ate::load_ate_spec(short_row.path()),
                       doctest::Contains("row has 1"), ortho::io_error);

  const testutil::TempFile missing("x.probs = 1.0\npi = 0.5\ny.support = 0 1\n"
                                   "y.cond.a1 = 0.4 0.6\n");
  CHECK_THROWS_WITH_AS(ate::load_ate_spec(missing.path()),
                       doctest::Contains("missing required key"), ortho::io_error);
}

TEST_CASE("model construction derives the documented truths") {
  const ATEModel m = reference_model();
  CHECK(m.nx() == 2);
  CHECK(m.ny() == 2);
  CHECK(m.space()->size() == 8);
  CHECK(m.space()->atom(0) == "x0.a0.y0");
  CHECK(m.space()->atom(3) == "x0.a1.y1");

  const ate::ATENuisances& t = m.truth();
  CHECK(t.mu1 == std::vector<double>{0.6, 0.9});
  CHECK(t.mu0 == std::vector<double>{0.2, 0.3});
  CHECK(std::abs(t.tau[0] - 0.4) <= 1e-15);
  CHECK(std::abs(t.tau[1] - 0.6) <= 1e-15);
  CHECK(std::abs(t.beta0 - 0.5) <= 1e-15);
  CHECK(std::abs(t.var_tau - 0.01) <= 1e-15);
  CHECK(std::abs(t.sigma2_a1[0] - 0.24) <= 1e-15);
  CHECK(std::abs(t.sigma2_a1[1] - 0.09) <= 1e-15);
  CHECK(std::abs(t.sigma2_a0[0] - 0.16) <= 1e-15);
  CHECK(std::abs(t.sigma2_a0[1] - 0.21) <= 1e-15);

  // Declared regularity constants take precedence over the defaults.
  CHECK(m.epsilon() == 0.25);
  CHECK(m.c_y() == 1.0);
  CHECK(m.sigma2_min() == 0.05);

  // Atom indexing round-trips.
  for (std::size_t atom = 0; atom < m.space()->size(); ++atom) {
    std::size_t x, yk;
    int a;
    m.decode(atom, x, a, yk);
    CHECK(m.atom_index(x, a, yk) == atom);
  }

  // eta layout and labels.
  CHECK(m.eta_truth() ==
        std::vector<double>{0.6, 0.9, 0.2, 0.3, 0.5, 0.5});
  CHECK(m.eta_labels() ==
        std::vector<std::string>{"mu1[x0]", "mu1[x1]", "mu0[x0]", "mu0[x1]",
                                 "pi[x0]", "pi[x1]"});
}

TEST_CASE("degenerate model descriptions are rejected by name") {
  auto expect = [](ATESpecData s, const std::string& needle) {
    CHECK_THROWS_WITH_AS(ATEModel::build(s), doctest::Contains(needle.c_str()),
                         std::invalid_argument);
  };
  ATESpecData s = testutil::reference_spec();
  s.pi = {1.0, 0.5};
  expect(s, "(R1)");

  s = testutil::reference_spec();
  s.y_cond_a1[0] = {1.0, 0.0};  // point mass: zero outcome variance
  expect(s, "(R3)");

  s = testutil::reference_spec();
  s.y_cond_a1 = {{0.1, 0.9}, {0.1, 0.9}};
  s.y_cond_a0 = {{0.8, 0.2}, {0.8, 0.2}};  // tau constant at 0.7
  expect(s, "(R4)");

  s = testutil::reference_spec();
  s.x_probs = {0.6, 0.5};
  expect(s, "does not sum to 1");

  s = testutil::reference_spec();
  s.x_probs = {1.0, 0.0};
  expect(s, "strictly positive");

  s = testutil::reference_spec();
  s.y_support = {1.0, 1.0};
  expect(s, "distinct");

  s = testutil::reference_spec();
  s.epsilon = 0.6;
  expect(s, "(0, 0.5)");

  s = testutil::reference_spec();
  s.c_y = -1.0;
  expect(s, "positive");

  s = testutil::reference_spec();
  s.sigma2_min = -0.1;
  expect(s, "non-negative");
}

TEST_CASE("undeclared regularity constants fall back to defaults") {
  ATESpecData s;
  s.x_probs = {0.5, 0.5};
  s.pi = {0.4, 0.6};
  s.y_support = {-2.0, 3.0};
  s.y_cond_a1 = {{0.5, 0.5}, {0.2, 0.8}};
  s.y_cond_a0 = {{0.9, 0.1}, {0.5, 0.5}};
  const ATEModel m = ATEModel::build(s);
  CHECK(m.epsilon() == 0.05);
  CHECK(m.c_y() == 3.0);  // max |y|
  CHECK(m.sigma2_min() == 0.0);
}

TEST_CASE("the joint law factorizes and the functionals recover the truth") {
  const ATEModel m = reference_model();
  const std::vector<double> expected = reference_joint();
  REQUIRE(m.joint().size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(std::abs(m.joint()[i] - expected[i]) <= 1e-15);
  }
  CHECK(std::abs(m.joint().mass(m.atom_index(0, 1, 1)) - 0.15) <= 1e-15);

  const ScalarFunctional beta = ate::beta_functional(m);
  CHECK(std::abs(beta.evaluate(m.joint()) - 0.5) <= 1e-14);
  const std::vector<double> eta = ate::eta_functional(m).evaluate(m.joint());
  const std::vector<double> eta0 = m.eta_truth();
  REQUIRE(eta.size() == eta0.size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    CHECK(std::abs(eta[i] - eta0[i]) <= 1e-12);
  }

  // Shifting the outcome conditional of cell (x0, a1) to (0.5, 0.5) lowers
  // mu1(x0) to 0.5, so beta drops to (0.3 + 0.6) / 2 = 0.45.
  std::vector<double> shifted = expected;
  shifted[m.atom_index(0, 1, 0)] = 0.125;
  shifted[m.atom_index(0, 1, 1)] = 0.125;
  CHECK(std::abs(beta.evaluate(Distribution(m.space(), shifted)) - 0.45) <=
        1e-14);

  // Removing all mass from a treatment cell makes the contrast undefined.
  std::vector<double> broken = expected;
  broken[m.atom_index(0, 0, 0)] += broken[m.atom_index(0, 1, 0)];
  broken[m.atom_index(0, 0, 1)] += broken[m.atom_index(0, 1, 1)];
  broken[m.atom_index(0, 1, 0)] = 0.0;
  broken[m.atom_index(0, 1, 1)] = 0.0;
  CHECK_THROWS_WITH_AS(beta.evaluate(Distribution(m.space(), broken)),
                       doctest::Contains("conditional support lost"),
                       std::domain_error);
}

TEST_CASE("the influence function of the effect has the closed form") {
  const ATEModel m = reference_model();
  const RealFunction phi = ate::ate_phi(m);
  // (y - mu1)/pi + mu1 - mu0 - beta at (x0, a1, y1): 0.8 - 0.1 = 0.7.
  CHECK(std::abs(phi[m.atom_index(0, 1, 1)] - 0.7) <= 1e-12);
  // -(y - mu0)/(1 - pi) + mu1 - mu0 - beta at (x0, a0, y0): 0.4 - 0.1 = 0.3.
  CHECK(std::abs(phi[m.atom_index(0, 0, 0)] - 0.3) <= 1e-12);
  CHECK(std::abs(expectation(m.joint(), phi)) <= 1e-14);
  CHECK(std::abs(inner_product(m.joint(), phi, phi) - 0.71) <= 1e-12);
}

TEST_CASE("the effect coordinate moves beta at unit rate and nothing else") {
  const ATEModel m = reference_model();
  const Submodel sub = ate::beta_coordinate_submodel(m);
  // Score (tau(x) - beta0)/Var(tau) = -10 on x0 atoms, +10 on x1 atoms.
  REQUIRE(sub.declared_score().has_value());
  const RealFunction& g = *sub.declared_score();
  CHECK(std::abs(g[m.atom_index(0, 0, 0)] - (-10.0)) <= 1e-12);
  CHECK(std::abs(g[m.atom_index(1, 1, 1)] - 10.0) <= 1e-12);
  CHECK(std::abs(sub.t_max() - 0.1) <= 1e-15);

  const ScalarFunctional beta = ate::beta_functional(m);
  const NuisanceFunctional eta = ate::eta_functional(m);
  const std::vector<double> eta0 = m.eta_truth();
  for (double t : {1e-3, -1e-3, 0.05}) {
    CHECK(std::abs(beta.evaluate(sub.at(t)) - (0.5 + t)) <= 1e-12);
    const std::vector<double> et = eta.evaluate(sub.at(t));
    for (std::size_t i = 0; i < et.size(); ++i) {
      CHECK(std::abs(et[i] - eta0[i]) <= 1e-12);
    }
  }
  // The score has sup norm 10, so the mean-square residual is ~156 t^2 and
  // needs a grid scaled by 1/sup|g| to clear the absolute threshold.
  CHECK(verify_qmd(sub, {1e-5, 3.1622776601683794e-6, 1e-6,
                         3.1622776601683794e-7})
            .pass);
}

TEST_CASE("nuisance coordinates realize their declared rates") {
  const ATEModel m = reference_model();
  const ScalarFunctional beta = ate::beta_functional(m);
  const NuisanceFunctional eta = ate::eta_functional(m);

  const auto dirs = ate::canonical_directions(m);
  REQUIRE(dirs.size() == 6);
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    CHECK(dirs[j].first == m.eta_labels()[j]);
    const Submodel sub = eta_submodel_from_flat(m, dirs[j].second);
    CHECK(std::abs(pathwise_derivative(beta, sub)) <= 1e-6);
    const std::vector<double> rate = eta_pathwise_rate(eta, sub);
    REQUIRE(rate.size() == 6);
    for (std::size_t i = 0; i < rate.size(); ++i) {
      CHECK(std::abs(rate[i] - (i == j ? 1.0 : 0.0)) <= 1e-6);
    }
  }

  // Equal shifts of both regressions leave the contrast fixed without any
  // compensating effect term (alpha0 = -E[h1 - h0] = 0).
  const Submodel balanced =
      ate::eta_coordinate_submodel(m, {1.0, 1.0}, {1.0, 1.0}, {0.0, 0.0});
  CHECK(std::abs(pathwise_derivative(beta, balanced)) <= 1e-6);
  const std::vector<double> rate = eta_pathwise_rate(eta, balanced);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(rate[i] - 1.0) <= 1e-6);
  CHECK(std::abs(rate[4]) <= 1e-6);
  CHECK(std::abs(rate[5]) <= 1e-6);

  CHECK_THROWS_WITH_AS(
      ate::eta_coordinate_submodel(m, {1.0}, {0.0, 0.0}, {0.0, 0.0}),
      doctest::Contains("covariate levels"), std::invalid_argument);
}

TEST_CASE("the default sweep direction is a normalized wave") {
  const ATEModel m = sweep_model();
  const ate::SweepDirection d = ate::default_sweep_direction(m);
  REQUIRE(d.h1.size() == 2);
  CHECK(d.h1[0] > 0.92);
  CHECK(d.h1[0] < 0.93);
  CHECK(d.h1[1] == 1.0);  // the largest entry normalizes to exactly 1
  CHECK(d.h0[0] == -d.h1[0]);
  CHECK(d.h0[1] == -d.h1[1]);
  CHECK(d.hpi[0] > 0.29);
  CHECK(d.hpi[0] < 0.30);
  CHECK(d.hpi[1] > -0.23);
  CHECK(d.hpi[1] < -0.22);
}

TEST_CASE("population sweep separates first- and second-order bias") {
  const ATEModel m = sweep_model();
  const std::vector<double> eps = {0.2, 0.1, 0.05, 0.025};
  const ate::SweepReport rep = ate::bias_sweep(m, eps);
  CHECK(rep.population);
  CHECK(rep.slopes_checked);
  CHECK(rep.pass);
  REQUIRE(rep.rows.size() == 8);
  CHECK(rep.orth_slope > 1.75);
  CHECK(rep.orth_slope < 1.95);
  CHECK(std::abs(rep.plugin_slope - 1.0) <= 1e-6);

  // The plugin bias is exactly eps * E[h1(X) - h0(X)] by linearity.
  const ate::SweepDirection d = ate::default_sweep_direction(m);
  double c1 = 0.0;
  for (std::size_t x = 0; x < m.nx(); ++x) {
    c1 += m.spec().x_probs[x] * (d.h1[x] - d.h0[x]);
  }
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const ate::SweepRow& orth = rep.rows[2 * i];
    const ate::SweepRow& plug = rep.rows[2 * i + 1];
    CHECK(orth.estimator == "orthogonal");
    CHECK(plug.estimator == "plugin");
    CHECK(orth.eps == eps[i]);
    CHECK(std::abs(plug.mean_bias - eps[i] * c1) <= 1e-14);
    CHECK(orth.abs_bias < plug.abs_bias);  // second order beats first order
  }
}

TEST_CASE("small perturbations confirm the quadratic bias law") {
  const ATEModel m = sweep_model();
  const ate::SweepDirection d = ate::default_sweep_direction(m);
  const double c2 = quadratic_coefficient(m, d);
  REQUIRE(std::abs(c2) > 0.1);  // the asymmetric propensities keep it alive
  const std::vector<double> eps = {4e-3, 2e-3, 1e-3};
  const ate::SweepReport rep = ate::bias_sweep(m, eps);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double ratio = rep.rows[2 * i].mean_bias / (eps[i] * eps[i]);
    CHECK(std::abs(ratio - c2) <= 0.01 * std::abs(c2));
  }
}

TEST_CASE("balanced propensities cancel the quadratic term") {
  // With pi = 0.5 everywhere and h0 = -h1 the second-order coefficient
  // vanishes, so the orthogonal bias decays faster than eps^2 and the slope
  // check must fail: this is precisely why the sweep variant exists.
  const ATEModel m = reference_model();
  CHECK(std::abs(quadratic_coefficient(m, ate::default_sweep_direction(m))) <=
        1e-15);
  const ate::SweepReport rep = ate::bias_sweep(m, {0.2, 0.1, 0.05, 0.025});
  CHECK(rep.slopes_checked);
  CHECK_FALSE(rep.pass);
  CHECK(rep.orth_slope > 2.3);
}

TEST_CASE("sweep rejects impossible requests and degenerate grids") {
  const ATEModel m = sweep_model();
  CHECK_THROWS_WITH_AS(ate::bias_sweep(m, {3.0}),
                       doctest::Contains("positivity bounds"),
                       std::domain_error);
  CHECK_THROWS_WITH_AS(ate::bias_sweep(m, {}),
                       doctest::Contains("empty"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(ate::bias_sweep(m, {-0.1}),
                       doctest::Contains("non-negative"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(ate::bias_sweep(m, {0.1}, false, 0, 10),
                       doctest::Contains("n > 0"), std::invalid_argument);
  ate::SweepDirection bad;
  bad.h1 = {1.0};
  bad.h0 = {-1.0};
  bad.hpi = {0.0};
  CHECK_THROWS_WITH_AS(ate::bias_sweep(m, {0.1}, true, 0, 1, kDefaultSeed, bad),
                       doctest::Contains("covariate levels"),
                       std::invalid_argument);

  // eps = 0 reproduces the truth: zero bias, no usable slope points.
  const ate::SweepReport zero = ate::bias_sweep(m, {0.0});
  CHECK(std::abs(zero.rows[0].mean_bias) <= 1e-14);
  CHECK(zero.rows[1].mean_bias == 0.0);
}

TEST_CASE("sampled sweeps are reproducible and unbiased at zero error") {
  const ATEModel m = sweep_model();
  const std::vector<double> eps = {0.0, 0.1};
  const ate::SweepReport a = ate::bias_sweep(m, eps, false, 400, 25, 123);
  const ate::SweepReport b = ate::bias_sweep(m, eps, false, 400, 25, 123);
  CHECK(ate::sweep_to_csv(a) == ate::sweep_to_csv(b));
  CHECK_FALSE(a.slopes_checked);
  CHECK(a.pass);  // nothing checked, nothing failed
  CHECK(a.rows[0].n == 400);
  CHECK(a.rows[0].reps == 25);

  // At eps = 0 the orthogonal estimator is unbiased; the Monte Carlo mean
  // must sit within three standard errors of zero.
  const ate::SweepRow& orth0 = a.rows[0];
  CHECK(orth0.se > 0.0);
  CHECK(std::abs(orth0.mean_bias) <= 3.0 * orth0.se);

  const ate::SweepReport c = ate::bias_sweep(m, eps, false, 400, 25, 124);
  CHECK(c.rows[0].mean_bias != a.rows[0].mean_bias);
}

TEST_CASE("sweep reports render as stable CSV") {
  const ATEModel m = sweep_model();
  const std::string csv = ate::sweep_to_csv(ate::bias_sweep(m, {0.1, 0.05}));
  CHECK(csv.rfind("estimator,eps,n,reps,mean_bias,se,abs_bias\n", 0) == 0);
  CHECK(csv.find("\northogonal_slope,,,,") != std::string::npos);
  CHECK(csv.find("\nplugin_slope,,,,") != std::string::npos);
  // header + 2 eps * 2 estimators + 2 slope rows
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 7);
}

TEST_CASE("the regularity audit reports margins and the Lipschitz constant") {
  const ate::RegularityReport rep = ate::check_regularity(reference_model());
  CHECK(rep.pass);
  REQUIRE(rep.rows.size() == 5);
  CHECK(std::abs(row_named(rep, "R1.overlap_margin").value - 0.25) <= 1e-15);
  CHECK(row_named(rep, "R2.outcome_bound").value == 1.0);
  CHECK(std::abs(row_named(rep, "R3.min_conditional_variance").value - 0.09) <=
        1e-15);
  CHECK(std::abs(row_named(rep, "R4.effect_variance").value - 0.01) <= 1e-15);
  // 4 sqrt(2) c_y (1 + 1/eps) = 20 sqrt(2) for c_y = 1, eps = 0.25.
  CHECK(std::abs(rep.lipschitz_c - 28.284271247461902) <= 1e-12);
  CHECK(row_named(rep, "hellinger_lipschitz_c").criterion == "(info)");

  ATESpecData s = testutil::reference_spec();
  s.c_y = 0.5;  // outcomes reach 1: declared bound too small
  const ate::RegularityReport r2 = ate::check_regularity(ATEModel::build(s));
  CHECK_FALSE(r2.pass);
  CHECK_FALSE(row_named(r2, "R2.outcome_bound").pass);

  s = testutil::sweep_spec();
  s.epsilon = 0.3;  // pi(x0) = 0.25 sits outside the declared margin
  const ate::RegularityReport r1 = ate::check_regularity(ATEModel::build(s));
  CHECK_FALSE(r1.pass);
  CHECK_FALSE(row_named(r1, "R1.overlap_margin").pass);
  CHECK(row_named(r1, "R1.overlap_margin").value < 0.0);

  s = testutil::reference_spec();
  s.sigma2_min = 0.5;  // smallest conditional variance is 0.09
  const ate::RegularityReport r3 = ate::check_regularity(ATEModel::build(s));
  CHECK_FALSE(r3.pass);
  CHECK_FALSE(row_named(r3, "R3.min_conditional_variance").pass);
}

TEST_CASE("the admissibility predicate tracks recomputed propensities") {
  const ATEModel m = reference_model();
  const auto admissible = ate::admissible_predicate(m);
  CHECK(admissible(m.joint()));

  // Rescaling the (x0, a) cells to propensity 0.1 exits the 0.25 margin.
  std::vector<double> p = reference_joint();
  p[m.atom_index(0, 1, 0)] *= 0.2;
  p[m.atom_index(0, 1, 1)] *= 0.2;
  p[m.atom_index(0, 0, 0)] *= 1.8;
  p[m.atom_index(0, 0, 1)] *= 1.8;
  CHECK_FALSE(admissible(Distribution(m.space(), p)));

  // A law that loses a whole cell is inadmissible rather than an error.
  std::vector<double> broken = reference_joint();
  broken[m.atom_index(0, 0, 0)] += broken[m.atom_index(0, 1, 0)];
  broken[m.atom_index(0, 0, 1)] += broken[m.atom_index(0, 1, 1)];
  broken[m.atom_index(0, 1, 0)] = 0.0;
  broken[m.atom_index(0, 1, 1)] = 0.0;
  CHECK_FALSE(admissible(Distribution(m.space(), broken)));
}

}  // TEST_SUITE

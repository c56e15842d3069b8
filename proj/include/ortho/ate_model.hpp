#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ortho/estimating_engine.hpp"
#include "ortho/functional_calculus.hpp"
#include "ortho/model_core.hpp"
#include "ortho/submodel.hpp"

namespace ortho::ate {

// Propensities are kept strictly inside [kPiFloor, 1 - kPiFloor] whenever the
// nuisance vector is perturbed.
inline constexpr double kPiFloor = 1e-3;

// Declarative description of a treatment-effect model on a finite space:
// covariate marginal, propensity per covariate level, outcome support and the
// outcome conditionals per (covariate, arm).
struct ATESpecData {
  std::vector<double> x_probs;                // P(X = x)
  std::vector<double> pi;                     // P(A = 1 | X = x)
  std::vector<double> y_support;              // distinct outcome values
  std::vector<std::vector<double>> y_cond_a1; // rows = x, cols = y
  std::vector<std::vector<double>> y_cond_a0;
  std::optional<double> epsilon;              // declared overlap margin
  std::optional<double> c_y;                  // declared outcome bound
  std::optional<double> sigma2_min;           // declared variance floor
};

ATESpecData load_ate_spec(const std::string& path);

// True nuisance values derived from the model.
struct ATENuisances {
  std::vector<double> mu1, mu0, tau, pi;      // per covariate level
  std::vector<double> sigma2_a1, sigma2_a0;   // outcome variance per (x, a)
  double beta0 = 0.0;                         // E[tau(X)]
  double var_tau = 0.0;                       // Var(tau(X))
};

// Joint law over atoms (x, a, y) flattened into a SampleSpace with counting
// measure; p0(y,x,a) = P(X=x) * P(A=a|X=x) * P(Y=y|X=x,A=a).
class ATEModel {
 public:
  // Validates the description; throws std::invalid_argument naming the failed
  // condition:
  //   (R1) every propensity strictly inside (0, 1)
  //   (R3) every conditional outcome variance strictly positive
  //   (R4) Var(tau(X)) strictly positive
  // plus normalization of all probability inputs.  Declared-margin versions
  // of (R1)-(R3) are evaluated by check_regularity, not here.
  static ATEModel build(const ATESpecData& spec);

  const Distribution& joint() const { return *joint_; }
  const SpacePtr& space() const { return space_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  // atom index for covariate level x, arm a, outcome index yk
  std::size_t atom_index(std::size_t x, int a, std::size_t yk) const;
  void decode(std::size_t atom, std::size_t& x, int& a, std::size_t& yk) const;
  double y_value(std::size_t yk) const { return spec_.y_support[yk]; }
  const ATENuisances& truth() const { return truth_; }
  const ATESpecData& spec() const { return spec_; }
  double epsilon() const;     // declared or default margin
  double c_y() const;         // declared or max |y|
  double sigma2_min() const;  // declared or 0

  // Nuisance vector layout: [mu1(x...), mu0(x...), pi(x...)], labels
  // "mu1[x]", "mu0[x]", "pi[x]".
  std::vector<double> eta_truth() const;
  std::vector<std::string> eta_labels() const;

 private:
  ATEModel() = default;
  ATESpecData spec_;
  SpacePtr space_;
  std::optional<Distribution> joint_;
  ATENuisances truth_;
  std::size_t nx_ = 0, ny_ = 0;
};

// beta(P) = E_P[mu1^P(X) - mu0^P(X)], with the regressions recomputed from P.
// Throws std::domain_error when a (x, a) cell loses all mass.
ScalarFunctional beta_functional(const ATEModel& model);

// eta(P) = (mu1^P, mu0^P, pi^P) flattened over covariate levels.
NuisanceFunctional eta_functional(const ATEModel& model);

// Doubly robust estimating function
//   m(z; beta, eta) = a/pi (y - mu1) - (1-a)/(1-pi) (y - mu0) + mu1 - mu0 - beta.
// Admissible nuisances keep every propensity inside [kPiFloor, 1 - kPiFloor].
EstimatingFunction ate_m(const ATEModel& model);

// m at the truth: the influence function of beta.
RealFunction ate_phi(const ATEModel& model);

// Linear tilt with score (tau(x) - beta0)/Var(tau): moves beta at unit rate
// (beta(P_t) = beta0 + t exactly) while leaving all nuisances unchanged.
Submodel beta_coordinate_submodel(const ATEModel& model);

// Linear tilt realizing nuisance rates (h1, h0, hpi) with zero beta rate.
// Score: h_a(x)(y - mu_a(x))/sigma_a^2(x) + hpi(x)(a - pi(x))/(pi(1-pi))
//        + alpha0 * (tau(x) - beta0)/Var(tau),  alpha0 = -E[h1(X) - h0(X)].
Submodel eta_coordinate_submodel(const ATEModel& model, const std::vector<double>& h1,
                                 const std::vector<double>& h0,
                                 const std::vector<double>& hpi);

// Canonical nuisance directions (unit vectors in eta layout) with labels.
std::vector<std::pair<std::string, std::vector<double>>> canonical_directions(
    const ATEModel& model);

struct SweepDirection {
  std::vector<double> h1, h0, hpi;
};

// Default perturbation direction: h1 follows a sine pattern over covariate
// levels, h0 = -h1 and hpi follows a half-amplitude cosine pattern; the
// triple is normalized to sup norm 1.  Keeps E[h1 - h0] away from zero so the
// plugin bias has a first-order term.
SweepDirection default_sweep_direction(const ATEModel& model);

struct SweepRow {
  std::string estimator;  // "orthogonal" or "plugin"
  double eps = 0.0;
  std::size_t n = 0;      // 0 in population mode
  std::size_t reps = 1;
  double mean_bias = 0.0;
  double se = 0.0;
  double abs_bias = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  double orth_slope = 0.0;
  double plugin_slope = 0.0;
  bool population = true;
  std::size_t n = 0, reps = 0;
  std::uint64_t seed = 0;
  // Slope bands checked in population mode.
  double orth_lo = 1.7, orth_hi = 2.3, plugin_lo = 0.8, plugin_hi = 1.2;
  bool slopes_checked = false;
  bool pass = true;
};

// Bias of the orthogonal estimator (root of the estimating equation under the
// perturbed nuisance) versus the plugin estimator (covariate average of the
// perturbed regression contrast) as the nuisance error eps varies.
// Population mode evaluates exact expectations; sampled mode draws n atoms
// per replicate via inverse-CDF sampling with one derived substream per
// (eps, replicate).  Throws std::domain_error when a perturbation pushes a
// propensity outside [kPiFloor, 1 - kPiFloor].
SweepReport bias_sweep(const ATEModel& model, const std::vector<double>& eps_list,
                       bool population = true, std::size_t n = 0, std::size_t reps = 1,
                       std::uint64_t seed = kDefaultSeed,
                       const std::optional<SweepDirection>& direction = {});

// CSV rendering: header estimator,eps,n,reps,mean_bias,se,abs_bias followed by
// the data rows and two summary rows with the fitted log-log slopes.
// Byte-identical for identical (model, arguments, seed).
std::string sweep_to_csv(const SweepReport& report);

struct RegularityRow {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string criterion;
  bool pass = true;
};

struct RegularityReport {
  std::vector<RegularityRow> rows;
  double lipschitz_c = 0.0;  // 4 sqrt(2) c_y (1 + 1/epsilon)
  bool pass = true;
};

// Evaluates the declared-margin conditions:
//   (R1) epsilon <= pi(x) <= 1 - epsilon
//   (R2) max |y| <= c_y
//   (R3) min conditional outcome variance >= sigma2_min (and > 0)
//   (R4) Var(tau(X)) > 0
// and reports the Hellinger-Lipschitz constant 4 sqrt(2) c_y (1 + 1/epsilon).
RegularityReport check_regularity(const ATEModel& model);

// Admissibility predicate for probe sampling: the propensity recomputed from
// the candidate law stays inside the declared margin [epsilon, 1 - epsilon].
std::function<bool(const Distribution&)> admissible_predicate(const ATEModel& model);

}  // namespace ortho::ate

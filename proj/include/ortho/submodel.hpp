#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ortho/model_core.hpp"

namespace ortho {

// Default thresholds for differentiability-in-quadratic-mean verification.
inline constexpr double kQmdSlopeMin = 1.9;
inline constexpr double kQmdResMax = 1e-10;
inline constexpr double kGapSlack = 0.05;
inline constexpr double kRecoverTol = 1e-8;

// Default log-spaced grid of path parameters, strictly decreasing.
const std::vector<double>& default_t_grid();

// One-parameter family of distributions through a base point.
// Invariants: density_at(0) returns the base exactly; density_at(t) is a
// valid Distribution for |t| < t_max.
class Submodel {
 public:
  Submodel(Distribution base, std::function<Distribution(double)> density_at,
           double t_max, std::optional<RealFunction> declared_score = {});

  const Distribution& base() const { return base_; }
  double t_max() const { return t_max_; }
  // Evaluates the path; |t| must be strictly inside the valid range.
  Distribution at(double t) const;
  const std::optional<RealFunction>& declared_score() const { return declared_score_; }

 private:
  Distribution base_;
  std::function<Distribution(double)> density_at_;
  double t_max_;
  std::optional<RealFunction> declared_score_;
};

// Linear tilt p_t(z) = p0(z) (1 + t g(z)) for a bounded mean-zero g; valid for
// |t| < 1/sup|g| (the whole line when g vanishes on the support).  The tilt's
// score is g itself, attached as the declared score.
Submodel linear_tilt(const Distribution& base, const ScoreFunction& g);

// Squared L2(nu) remainder of the root-density expansion at parameter t:
//   integral ( (sqrt p_t - sqrt p0)/t - (1/2) s sqrt p0 )^2 dnu.
// Vanishes as t^2 exactly when s is the path's score.
double qmd_residual(const Submodel& sub, const RealFunction& s, double t);

struct QMDReport {
  std::vector<double> ts;
  std::vector<double> residuals;
  double slope = 0.0;      // log-log decay rate; +inf when residuals vanish
  double slope_min = kQmdSlopeMin;
  double res_max = kQmdResMax;
  bool score_plateau = false;  // residuals level off: candidate is not the score
  std::string note;
  bool pass = false;
};

// Evaluates qmd_residual on a strictly decreasing positive grid and fits the
// log-log decay rate.  Pass requires the residual at the smallest t to be at
// most res_max and the decay rate to reach slope_min (trivially satisfied
// when every residual is already below res_max).  A plateau (rate < 0.5 with
// a non-small residual) is flagged as "not the score of this path".
QMDReport verify_qmd(const Submodel& sub, const RealFunction& s,
                     std::vector<double> t_grid = {},
                     double slope_min = kQmdSlopeMin, double res_max = kQmdResMax);

// Convenience overload using the submodel's declared score.
QMDReport verify_qmd(const Submodel& sub, std::vector<double> t_grid = {},
                     double slope_min = kQmdSlopeMin, double res_max = kQmdResMax);

// Recovers the score as the centered derivative of p_t/p0 - 1 at t = 0
// (central differences, one Richardson level).  Requires a full-support base;
// exact for linear tilts up to rounding.
RealFunction recover_score(const Submodel& sub);

// Returns the submodel's declared score, or recovers it numerically.
RealFunction effective_score(const Submodel& sub);

// d/dt E_{P_t}[f] at t = 0 for a fixed function f.  For a path with score s
// this equals E_0[f s].
double ddt_expectation_fixed(const Submodel& sub, const RealFunction& f);

// d/dt E_{P_t}[f_t] at t = 0 for a t-dependent family; equals
// E_0[f_0 s] + E_0[d/dt f_t|_0].
double ddt_expectation_varying(const Submodel& sub,
                               const std::function<RealFunction(double)>& family);

struct GapReport {
  std::vector<double> ts;
  std::vector<double> ratios;  // H(P_{t,s}, P_{t,g}) / t
  double limit = 0.0;          // ||s - g||_{L2(P0)} / (2 sqrt 2)
  double slack = kGapSlack;
  bool pass = false;
};

// Verifies that two tilts of the same base with scores s and g separate at
// Hellinger rate at most ||s-g||_{L2(P0)} / (2 sqrt 2): the measured ratio at
// the smallest t must not exceed the limit by more than the slack fraction.
GapReport hellinger_gap_check(const Distribution& base, const ScoreFunction& s,
                              const ScoreFunction& g,
                              std::vector<double> t_grid = {},
                              double slack = kGapSlack);

// Step scale keeping finite-difference evaluations inside the path's range.
double step_scale(const Submodel& sub);

}  // namespace ortho

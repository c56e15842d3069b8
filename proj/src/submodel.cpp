#include "ortho/submodel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ortho/numeric.hpp"

namespace ortho {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_decreasing_grid(const std::vector<double>& g, std::size_t min_points = 2) {
  if (g.size() < min_points) {
    throw std::invalid_argument("t grid needs at least " + std::to_string(min_points) +
                                " points");
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(g[i] > 0.0) || !std::isfinite(g[i])) {
      throw std::invalid_argument("t grid must contain positive finite values");
    }
    if (i > 0 && !(g[i] < g[i - 1])) {
      throw std::invalid_argument("t grid must be strictly decreasing");
    }
  }
}

}  // namespace

const std::vector<double>& default_t_grid() {
  static const std::vector<double> grid{1e-2, 3.1622776601683794e-3, 1e-3,
                                        3.1622776601683794e-4, 1e-4};
  return grid;
}

Submodel::Submodel(Distribution base, std::function<Distribution(double)> density_at,
                   double t_max, std::optional<RealFunction> declared_score)
    : base_(std::move(base)),
      density_at_(std::move(density_at)),
      t_max_(t_max),
      declared_score_(std::move(declared_score)) {
  if (!density_at_) throw std::invalid_argument("null density callback");
  if (!(t_max_ > 0.0)) throw std::invalid_argument("t_max must be positive");
  if (declared_score_) require_same_space(declared_score_->space(), base_.space());
  const Distribution at0 = density_at_(0.0);
  require_same_space(at0.space(), base_.space());
  for (std::size_t i = 0; i < base_.size(); ++i) {
    if (at0[i] != base_[i]) {
      throw std::invalid_argument("density_at(0) does not equal the base distribution");
    }
  }
}

Distribution Submodel::at(double t) const {
  if (!(std::abs(t) < t_max_)) {
    throw std::invalid_argument("path parameter " + std::to_string(t) +
                                " is outside the valid range (|t| < " +
                                std::to_string(t_max_) + ")");
  }
  Distribution d = density_at_(t);
  require_same_space(d.space(), base_.space());
  return d;
}

Submodel linear_tilt(const Distribution& base, const ScoreFunction& g) {
  require_same_space(base.space(), g.fn().space());
  if (!base.full_support()) {
    throw std::domain_error("linear tilt requires a full-support base distribution");
  }
  const double mean = expectation(base, g.fn());
  if (std::abs(mean) > kMeanZeroTol) {
    throw std::invalid_argument("tilt direction is not mean zero under the base");
  }
  // Re-center exactly so that the tilted mass stays within tolerance over the
  // whole parameter range.
  std::vector<double> gv = g.fn().values();
  for (double& x : gv) x -= mean;
  double sup_support = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i] > 0.0) sup_support = std::max(sup_support, std::abs(gv[i]));
  }
  const double t_max = sup_support > 0.0 ? 1.0 / sup_support : kInf;
  RealFunction score(base.space(), gv);
  auto at = [base, gv](double t) {
    std::vector<double> p(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      p[i] = base[i] * (1.0 + t * gv[i]);
    }
    return Distribution(base.space(), std::move(p));
  };
  return Submodel(base, std::move(at), t_max, std::move(score));
}

double qmd_residual(const Submodel& sub, const RealFunction& s, double t) {
  require_same_space(sub.base().space(), s.space());
  if (t == 0.0) throw std::invalid_argument("qmd residual is undefined at t = 0");
  const Distribution& p0 = sub.base();
  const Distribution pt = sub.at(t);
  const auto& nu = p0.space()->nu();
  num::Acc acc;
  for (std::size_t i = 0; i < p0.size(); ++i) {
    const double root0 = std::sqrt(p0[i]);
    const double d = (std::sqrt(pt[i]) - root0) / t - 0.5 * s[i] * root0;
    acc.add(d * d * nu[i]);
  }
  return std::max(0.0, acc.value());
}

QMDReport verify_qmd(const Submodel& sub, const RealFunction& s,
                     std::vector<double> t_grid, double slope_min, double res_max) {
  if (t_grid.empty()) t_grid = default_t_grid();
  require_decreasing_grid(t_grid, 3);
  QMDReport rep;
  rep.slope_min = slope_min;
  rep.res_max = res_max;
  rep.ts = t_grid;
  rep.residuals.reserve(t_grid.size());
  double max_res = 0.0;
  for (double t : t_grid) {
    const double r = qmd_residual(sub, s, t);
    rep.residuals.push_back(r);
    max_res = std::max(max_res, r);
  }
  rep.slope = num::loglog_slope(rep.ts, rep.residuals);
  const double last = rep.residuals.back();
  rep.pass = last <= res_max && (rep.slope >= slope_min || max_res <= res_max);
  if (!rep.pass && rep.slope < 0.5 && last > res_max) {
    rep.score_plateau = true;
    rep.note = "residuals plateau at " + std::to_string(last) +
               ": candidate is not the score of this path";
  }
  return rep;
}

QMDReport verify_qmd(const Submodel& sub, std::vector<double> t_grid,
                     double slope_min, double res_max) {
  return verify_qmd(sub, effective_score(sub), std::move(t_grid), slope_min, res_max);
}

double step_scale(const Submodel& sub) {
  if (!std::isfinite(sub.t_max())) return 1.0;
  return std::min(1.0, sub.t_max() / (8.0 * num::kStep0));
}

RealFunction recover_score(const Submodel& sub) {
  const Distribution& p0 = sub.base();
  if (!p0.full_support()) {
    throw std::domain_error("score recovery requires a full-support base distribution");
  }
  const double scale = step_scale(sub);
  std::vector<double> v(p0.size());
  for (std::size_t i = 0; i < p0.size(); ++i) {
    auto f = [&sub, i](double t) { return sub.at(t)[i]; };
    v[i] = num::central_derivative(f, scale).value / p0[i];
  }
  // Center: a score integrates to zero against the base.
  RealFunction raw(p0.space(), std::move(v));
  return center(p0, raw).fn();
}

RealFunction effective_score(const Submodel& sub) {
  if (sub.declared_score()) return *sub.declared_score();
  return recover_score(sub);
}

double ddt_expectation_fixed(const Submodel& sub, const RealFunction& f) {
  require_same_space(sub.base().space(), f.space());
  auto F = [&](double t) { return expectation(sub.at(t), f); };
  return num::central_derivative(F, step_scale(sub)).value;
}

double ddt_expectation_varying(const Submodel& sub,
                               const std::function<RealFunction(double)>& family) {
  if (!family) throw std::invalid_argument("null function family");
  auto F = [&](double t) { return expectation(sub.at(t), family(t)); };
  return num::central_derivative(F, step_scale(sub)).value;
}

GapReport hellinger_gap_check(const Distribution& base, const ScoreFunction& s,
                              const ScoreFunction& g, std::vector<double> t_grid,
                              double slack) {
  if (t_grid.empty()) t_grid = default_t_grid();
  require_decreasing_grid(t_grid);
  const Submodel sub_s = linear_tilt(base, s);
  const Submodel sub_g = linear_tilt(base, g);
  std::vector<double> diff(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) diff[i] = s.fn()[i] - g.fn()[i];
  const double norm = l2_norm(base, RealFunction(base.space(), std::move(diff)));
  GapReport rep;
  rep.ts = t_grid;
  rep.slack = slack;
  rep.limit = norm / (2.0 * std::sqrt(2.0));
  for (double t : t_grid) {
    rep.ratios.push_back(hellinger(sub_s.at(t), sub_g.at(t)) / t);
  }
  rep.pass = rep.ratios.back() <= rep.limit * (1.0 + slack) + 1e-15;
  return rep;
}

}  // namespace ortho

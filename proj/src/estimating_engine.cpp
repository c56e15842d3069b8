#include "ortho/estimating_engine.hpp"

#include <cmath>
#include <stdexcept>

#include "ortho/numeric.hpp"

namespace ortho {

namespace {

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void require_dim(const EstimatingFunction& m, const std::vector<double>& eta,
                 const char* what) {
  if (eta.size() != m.dim) {
    throw std::invalid_argument(std::string(what) + " has dimension " +
                                std::to_string(eta.size()) + ", expected " +
                                std::to_string(m.dim));
  }
}

}  // namespace

double expectation_m(const EstimatingFunction& m, const Distribution& p, double beta,
                     const std::vector<double>& eta) {
  if (!m.evaluate) throw std::invalid_argument("estimating function has no evaluator");
  require_dim(m, eta, "eta");
  num::Acc acc;
  const auto& nu = p.space()->nu();
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc.add(m.evaluate(i, beta, eta) * p[i] * nu[i]);
  }
  return acc.value();
}

RealFunction m_as_function(const EstimatingFunction& m, const SpacePtr& space,
                           double beta, const std::vector<double>& eta) {
  if (!m.evaluate) throw std::invalid_argument("estimating function has no evaluator");
  require_dim(m, eta, "eta");
  std::vector<double> v(space->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = m.evaluate(i, beta, eta);
  return RealFunction(space, std::move(v));
}

ParameterPair truth_at(const ScalarFunctional& beta, const NuisanceFunctional& eta,
                       const Distribution& p) {
  ParameterPair at;
  at.beta0 = beta.evaluate(p);
  at.eta0 = eta.evaluate ? eta.evaluate(p) : std::vector<double>{};
  if (eta.evaluate && at.eta0.size() != eta.dim()) {
    throw std::invalid_argument("nuisance functional returned " +
                                std::to_string(at.eta0.size()) + " values, expected " +
                                std::to_string(eta.dim()));
  }
  return at;
}

SpecificationReport check_correct_specification(const EstimatingFunction& m,
                                                const ScalarFunctional& beta,
                                                const NuisanceFunctional& eta,
                                                const std::vector<Distribution>& samples,
                                                double tol) {
  SpecificationReport rep;
  rep.tol = tol;
  for (const auto& p : samples) {
    const ParameterPair at = truth_at(beta, eta, p);
    const double r = expectation_m(m, p, at.beta0, at.eta0);
    rep.residuals.push_back(r);
    rep.max_abs = std::max(rep.max_abs, std::abs(r));
  }
  rep.pass = rep.max_abs <= tol;
  return rep;
}

std::vector<Distribution> specification_neighborhood(const Distribution& base,
                                                     std::size_t n, double radius,
                                                     std::uint64_t seed) {
  std::vector<Distribution> out;
  out.push_back(base);
  for (std::size_t i = 0; i < n; ++i) {
    rng::SplitMix64 gen(rng::derive(seed, i));
    const ScoreFunction g = random_score(base, gen, 0.5);
    const Submodel sub = linear_tilt(base, g);
    const double cap = std::min(2.0 * radius, 0.9 * sub.t_max());
    out.push_back(sub.at(gen.uniform(-cap, cap)));
  }
  return out;
}

double nuisance_gateaux(const EstimatingFunction& m, const Distribution& base,
                        const ParameterPair& at, const std::vector<double>& h) {
  require_dim(m, at.eta0, "eta0");
  require_dim(m, h, "direction");
  if (!m.is_admissible(at.eta0)) {
    throw std::invalid_argument("eta0 is not admissible");
  }
  double scale = std::max(1.0, sup_norm(at.eta0));
  const double dir_norm = sup_norm(h);
  if (dir_norm == 0.0) return 0.0;
  auto shifted = [&](double t) {
    std::vector<double> eta = at.eta0;
    for (std::size_t i = 0; i < eta.size(); ++i) eta[i] += t * h[i];
    return eta;
  };
  // The admissible set is assumed convex along the segment, so checking the
  // extreme evaluation points suffices.  Shrink until they are admissible.
  int shrink = 0;
  while (!m.is_admissible(shifted(num::kStep0 * scale)) ||
         !m.is_admissible(shifted(-num::kStep0 * scale))) {
    if (++shrink > 60) {
      throw std::domain_error(
          "direction leaves the admissible nuisance set for every small step");
    }
    scale /= 2.0;
  }
  auto F = [&](double t) { return expectation_m(m, base, at.beta0, shifted(t)); };
  return num::central_derivative(F, scale).value;
}

NeymanReport check_neyman(const EstimatingFunction& m, const Distribution& base,
                          const ParameterPair& at,
                          const std::vector<std::pair<std::string, std::vector<double>>>&
                              directions,
                          double tol) {
  NeymanReport rep;
  rep.tol = tol;
  if (directions.empty()) {
    rep.vacuous = true;
    return rep;
  }
  for (const auto& [name, h] : directions) {
    const double d = nuisance_gateaux(m, base, at, h);
    rep.derivatives.emplace_back(name, d);
    rep.max_abs = std::max(rep.max_abs, std::abs(d));
  }
  rep.pass = rep.max_abs <= tol;
  return rep;
}

JacobianResult jacobian_G(const EstimatingFunction& m, const Distribution& base,
                          const ParameterPair& at, double degenerate_tol) {
  require_dim(m, at.eta0, "eta0");
  auto F = [&](double db) { return expectation_m(m, base, at.beta0 + db, at.eta0); };
  JacobianResult res;
  res.G = num::central_derivative(F, std::max(1.0, std::abs(at.beta0))).value;
  res.degenerate = std::abs(res.G) <= degenerate_tol;
  return res;
}

std::vector<double> eta_pathwise_rate(const NuisanceFunctional& eta,
                                      const Submodel& sub) {
  if (!eta.evaluate) return {};
  const double scale = step_scale(sub);
  std::vector<double> rate(eta.dim());
  for (std::size_t j = 0; j < eta.dim(); ++j) {
    auto F = [&](double t) { return eta.evaluate(sub.at(t)).at(j); };
    rate[j] = num::central_derivative(F, scale).value;
  }
  return rate;
}

EquivalenceReport forward_verify(const EstimatingFunction& m, const Distribution& base,
                                 const ScalarFunctional& beta,
                                 const NuisanceFunctional& eta,
                                 const std::vector<ScoreFunction>& scores,
                                 const EngineTolerances& tol, std::uint64_t seed) {
  EquivalenceReport rep;
  rep.direction = "forward";
  const ParameterPair at = truth_at(beta, eta, base);
  rep.beta0 = at.beta0;
  if (!m.is_admissible(at.eta0)) {
    throw std::domain_error("eta(base) is not admissible for the estimating function");
  }

  rep.spec = check_correct_specification(m, beta, eta,
                                         specification_neighborhood(base, 20, 0.1, seed),
                                         tol.spec_tol);
  if (!rep.spec.pass) {
    rep.notes.push_back("specification failure: max |E_P[m]| = " +
                        std::to_string(rep.spec.max_abs));
    throw std::domain_error(
        "estimating function is not correctly specified near the base (max |E_P[m]| = " +
        std::to_string(rep.spec.max_abs) + ")");
  }

  const JacobianResult jac = jacobian_G(m, base, at, tol.g_degenerate);
  rep.G = jac.G;
  rep.G_degenerate = jac.degenerate;
  if (jac.degenerate) {
    throw std::domain_error("Jacobian G is degenerate (|G| = " +
                            std::to_string(std::abs(jac.G)) + ")");
  }

  const RealFunction m0 = m_as_function(m, base.space(), at.beta0, at.eta0);
  std::vector<double> phi_v(m0.values());
  for (double& x : phi_v) x /= -jac.G;
  RealFunction phi_raw(base.space(), std::move(phi_v));
  rep.phi_mean = expectation(base, phi_raw);
  const ScoreFunction phi = center(base, phi_raw);
  rep.phi = phi.fn();

  rep.influence = verify_influence(beta, phi, scores, tol.deriv_rel, tol.deriv_abs);

  for (const auto& s : scores) {
    const Submodel sub = linear_tilt(base, s);
    const double beta_rate = pathwise_derivative(beta, sub);
    const std::vector<double> eta_rate = eta_pathwise_rate(eta, sub);
    const double gate = eta.dim() ? nuisance_gateaux(m, base, at, eta_rate) : 0.0;
    const double r = inner_product(base, m0, s.fn()) + jac.G * beta_rate + gate;
    rep.identity_residuals.push_back(r);
    rep.max_identity_residual = std::max(rep.max_identity_residual, std::abs(r));
  }
  rep.identity_pass = rep.max_identity_residual <= tol.id_tol;

  rep.pass = rep.spec.pass && !rep.G_degenerate && rep.influence.pass &&
             rep.identity_pass;
  return rep;
}

EquivalenceReport reverse_verify(
    const EstimatingFunction& m, const Distribution& base,
    const ScalarFunctional& beta, const NuisanceFunctional& eta,
    const Submodel& beta_coord,
    const std::vector<std::pair<std::vector<double>, Submodel>>& eta_coords,
    const EngineTolerances& tol, std::size_t n_influence_scores, std::uint64_t seed) {
  EquivalenceReport rep;
  rep.direction = "reverse";
  const ParameterPair at = truth_at(beta, eta, base);
  rep.beta0 = at.beta0;
  if (!m.is_admissible(at.eta0)) {
    throw std::domain_error("eta(base) is not admissible for the estimating function");
  }

  // The candidate influence function is m at the truth.
  const RealFunction m0 = m_as_function(m, base.space(), at.beta0, at.eta0);
  rep.phi_mean = expectation(base, m0);
  const ScoreFunction phi = center(base, m0);
  rep.phi = phi.fn();
  {
    std::vector<ScoreFunction> scores;
    scores.reserve(n_influence_scores);
    for (std::size_t i = 0; i < n_influence_scores; ++i) {
      rng::SplitMix64 gen(rng::derive(seed, i));
      scores.push_back(random_score(base, gen, 0.5));
    }
    rep.influence = verify_influence(beta, phi, scores, tol.deriv_rel, tol.deriv_abs);
  }
  if (!rep.influence.pass) {
    rep.notes.push_back("m(.; beta0, eta0) fails influence verification");
  }

  const JacobianResult jac = jacobian_G(m, base, at, tol.g_degenerate);
  rep.G = jac.G;
  rep.G_degenerate = jac.degenerate;
  rep.g_pass = std::abs(jac.G + 1.0) <= tol.g_tol;
  if (!rep.g_pass) {
    rep.notes.push_back("Jacobian G = " + std::to_string(jac.G) +
                        " deviates from -1: product structure violated");
  }

  auto check_coord = [&](const std::string& name, const Submodel& sub,
                         double expected_beta_rate,
                         const std::vector<double>& expected_eta_rate) {
    CoordCheck c;
    c.name = name;
    const double beta_rate = pathwise_derivative(beta, sub);
    c.beta_rate_err = std::abs(beta_rate - expected_beta_rate);
    const std::vector<double> eta_rate = eta_pathwise_rate(eta, sub);
    for (std::size_t j = 0; j < eta_rate.size(); ++j) {
      const double want = j < expected_eta_rate.size() ? expected_eta_rate[j] : 0.0;
      c.eta_rate_err = std::max(c.eta_rate_err, std::abs(eta_rate[j] - want));
    }
    c.pass = c.beta_rate_err <= tol.coord_tol && c.eta_rate_err <= tol.coord_tol;
    if (!c.pass) {
      rep.notes.push_back("coordinate path '" + name +
                          "' violates its first-order conditions "
                          "(product structure violated)");
    }
    rep.coords.push_back(c);
    rep.coords_pass = rep.coords_pass && c.pass;

    // Identity (1 + G) beta_rate + dE_0[m]/deta[eta_rate] = 0 on this path.
    const double gate = eta.dim() ? nuisance_gateaux(m, base, at, eta_rate) : 0.0;
    const double r = (1.0 + jac.G) * beta_rate + gate;
    rep.identity_residuals.push_back(r);
    rep.max_identity_residual = std::max(rep.max_identity_residual, std::abs(r));
  };

  check_coord("beta", beta_coord, 1.0, std::vector<double>(eta.dim(), 0.0));
  for (std::size_t k = 0; k < eta_coords.size(); ++k) {
    check_coord("eta[" + std::to_string(k) + "]", eta_coords[k].second, 0.0,
                eta_coords[k].first);
  }
  rep.identity_pass = rep.max_identity_residual <= tol.id_tol;

  std::vector<std::pair<std::string, std::vector<double>>> directions;
  for (std::size_t k = 0; k < eta_coords.size(); ++k) {
    directions.emplace_back("h[" + std::to_string(k) + "]", eta_coords[k].first);
  }
  rep.neyman = check_neyman(m, base, at, directions, tol.neyman_tol);

  rep.pass = rep.influence.pass && rep.coords_pass && rep.identity_pass &&
             rep.g_pass && (rep.neyman.vacuous || rep.neyman.pass);
  return rep;
}

ChainRuleReport chain_rule_report(const EstimatingFunction& m, const Submodel& sub,
                                  const ScalarFunctional& beta,
                                  const NuisanceFunctional& eta,
                                  std::vector<double> t_grid) {
  if (t_grid.empty()) {
    t_grid = {1e-2, 3.1622776601683794e-3, 1e-3, 3.1622776601683794e-4};
  }
  const Distribution& base = sub.base();
  const ParameterPair at = truth_at(beta, eta, base);
  const double beta_rate = pathwise_derivative(beta, sub);
  const std::vector<double> eta_rate = eta_pathwise_rate(eta, sub);

  // Pointwise parameter derivatives of m at the truth.
  const double bscale = std::max(1.0, std::abs(at.beta0));
  const double escale = eta.dim()
                            ? std::max(1.0, sup_norm(at.eta0)) /
                                  std::max(1.0, sup_norm(eta_rate))
                            : 1.0;
  std::vector<double> drift(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto fb = [&](double db) { return m.evaluate(i, at.beta0 + db, at.eta0); };
    const double dmdb = num::central_derivative(fb, bscale).value;
    double dmde = 0.0;
    if (eta.dim()) {
      auto fe = [&](double u) {
        std::vector<double> e = at.eta0;
        for (std::size_t j = 0; j < e.size(); ++j) e[j] += u * eta_rate[j];
        return m.evaluate(i, at.beta0, e);
      };
      dmde = num::central_derivative(fe, escale).value;
    }
    drift[i] = dmdb * beta_rate + dmde;
  }

  ChainRuleReport rep;
  rep.ts = t_grid;
  const RealFunction f0 = m_as_function(m, base.space(), at.beta0, at.eta0);
  for (double t : t_grid) {
    const ParameterPair att = truth_at(beta, eta, sub.at(t));
    std::vector<double> r(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double ft = m.evaluate(i, att.beta0, att.eta0);
      r[i] = (ft - f0[i]) / t - drift[i];
    }
    rep.residuals.push_back(l2_norm(base, RealFunction(base.space(), std::move(r))));
  }
  rep.slope = num::loglog_slope(rep.ts, rep.residuals);
  rep.residual_at_min_t = rep.residuals.back();
  double max_res = 0.0;
  for (double r : rep.residuals) max_res = std::max(max_res, r);
  rep.pass = rep.slope >= 0.9 || max_res <= 1e-9;
  return rep;
}

double chain_rule_check(const EstimatingFunction& m, const Submodel& sub,
                        const ScalarFunctional& beta, const NuisanceFunctional& eta,
                        std::vector<double> t_grid) {
  return chain_rule_report(m, sub, beta, eta, std::move(t_grid)).residual_at_min_t;
}

GradCharReport gradient_characterization_check(const EstimatingFunction& D,
                                               const Distribution& base,
                                               const ScalarFunctional& beta,
                                               const NuisanceFunctional& eta,
                                               const Submodel& sub) {
  const ParameterPair at = truth_at(beta, eta, base);
  auto F = [&](double t) {
    const ParameterPair att = truth_at(beta, eta, sub.at(t));
    return expectation_m(D, base, att.beta0, att.eta0);
  };
  GradCharReport rep;
  rep.fd_value = num::central_derivative(F, step_scale(sub)).value;
  const RealFunction d0 = m_as_function(D, base.space(), at.beta0, at.eta0);
  rep.inner_value = -inner_product(base, d0, effective_score(sub));
  rep.err = std::abs(rep.fd_value - rep.inner_value);
  rep.tol = num::tol_for(rep.inner_value);
  rep.pass = rep.err <= rep.tol;
  return rep;
}

double negative_identity_check(const EstimatingFunction& D, const Distribution& base,
                               const ScalarFunctional& beta,
                               const NuisanceFunctional& eta) {
  const ParameterPair at = truth_at(beta, eta, base);
  const RealFunction d0 = m_as_function(D, base.space(), at.beta0, at.eta0);
  const double mean = expectation(base, d0);
  const double var = inner_product(base, d0, d0) - mean * mean;
  if (var <= 1e-14) {
    throw std::domain_error("influence candidate has zero variance at the truth");
  }
  return jacobian_G(D, base, at).G;
}

}  // namespace ortho

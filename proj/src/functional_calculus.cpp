#include "ortho/functional_calculus.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "ortho/numeric.hpp"

namespace ortho {

namespace {

// Centered indicator of atom k: a bounded mean-zero direction whose tilt
// moves only the mass of atom k to first order.
ScoreFunction centered_indicator(const Distribution& base, std::size_t k) {
  std::vector<double> v(base.size(), 0.0);
  v[k] = 1.0;
  return center(base, RealFunction(base.space(), std::move(v)));
}

// Isometry between L2(base) and Euclidean space: f -> f * sqrt(p0 nu).
Eigen::VectorXd scaled(const Distribution& base, const RealFunction& f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(base.size()));
  for (std::size_t i = 0; i < base.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = f[i] * std::sqrt(base.mass(i));
  }
  return v;
}

}  // namespace

double pathwise_derivative(const ScalarFunctional& beta, const Submodel& sub) {
  if (!beta.evaluate) throw std::invalid_argument("functional has no evaluator");
  auto F = [&](double t) { return beta.evaluate(sub.at(t)); };
  return num::central_derivative(F, step_scale(sub)).value;
}

RealFunction compute_eif(const ScalarFunctional& beta, const Distribution& base) {
  if (!beta.evaluate) throw std::invalid_argument("functional has no evaluator");
  if (!base.full_support()) {
    throw std::domain_error("gradient computation requires a full-support base");
  }
  const std::size_t n = base.size();
  std::vector<double> phi(n), spread(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Submodel sub = linear_tilt(base, centered_indicator(base, k));
    auto F = [&](double t) { return beta.evaluate(sub.at(t)); };
    const num::Deriv d = num::central_derivative(F, step_scale(sub));
    phi[k] = d.value / base.mass(k);
    spread[k] = d.consistency / base.mass(k);
  }
  double sup_phi = 0.0, sup_spread = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sup_phi = std::max(sup_phi, std::abs(phi[k]));
    sup_spread = std::max(sup_spread, spread[k]);
  }
  if (sup_spread > 1e-6 * std::max(1.0, sup_phi)) {
    throw std::domain_error(
        "finite differences do not converge: functional '" + beta.name +
        "' appears non-differentiable at this distribution");
  }
  return center(base, RealFunction(base.space(), std::move(phi))).fn();
}

InfluenceReport verify_influence(const ScalarFunctional& beta,
                                 const InfluenceCandidate& phi,
                                 const std::vector<ScoreFunction>& scores,
                                 double rel, double abs_floor) {
  InfluenceReport rep;
  const Distribution& base = phi.base();
  for (const auto& s : scores) {
    require_same_space(base.space(), s.fn().space());
    InfluenceRow row;
    row.lhs = pathwise_derivative(beta, linear_tilt(base, s));
    row.rhs = inner_product(base, phi.fn(), s.fn());
    row.err = std::abs(row.lhs - row.rhs);
    row.tol = std::max(abs_floor, rel * std::max(std::abs(row.lhs), std::abs(row.rhs)));
    row.pass = row.err <= row.tol;
    rep.max_err = std::max(rep.max_err, row.err);
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

InfluenceReport verify_influence(const ScalarFunctional& beta,
                                 const InfluenceCandidate& phi, std::size_t n_scores,
                                 std::uint64_t seed, double rel, double abs_floor) {
  std::vector<ScoreFunction> scores;
  scores.reserve(n_scores);
  for (std::size_t i = 0; i < n_scores; ++i) {
    rng::SplitMix64 gen(rng::derive(seed, i));
    scores.push_back(random_score(phi.base(), gen, 0.5));
  }
  return verify_influence(beta, phi, scores, rel, abs_floor);
}

std::size_t tangent_space_rank(const Distribution& base) {
  if (!base.full_support()) {
    throw std::domain_error("tangent space rank requires a full-support base");
  }
  const std::size_t n = base.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    m.col(static_cast<Eigen::Index>(k)) =
        scaled(base, centered_indicator(base, k).fn());
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const double tol = 1e-12 * std::max(1.0, svd.singularValues()[0]);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()[i] > tol) ++rank;
  }
  return rank;
}

std::vector<RealFunction> nuisance_tangent_basis(const ScalarFunctional& beta,
                                                 const Distribution& base) {
  if (!base.full_support()) {
    throw std::domain_error("nuisance tangent basis requires a full-support base");
  }
  const RealFunction phi = compute_eif(beta, base);
  const std::size_t n = base.size();
  const Eigen::VectorXd phi_s = scaled(base, phi);
  const bool degenerate = phi_s.norm() <= 1e-12;

  // Columns to remove: the constant direction (mean-zero constraint) and,
  // unless degenerate, the gradient direction.
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), degenerate ? 1 : 2);
  for (std::size_t i = 0; i < n; ++i) {
    m(static_cast<Eigen::Index>(i), 0) = std::sqrt(base.mass(i));
  }
  if (!degenerate) m.col(1) = phi_s;

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(
      static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<RealFunction> basis;
  for (Eigen::Index c = m.cols(); c < q.cols(); ++c) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = q(static_cast<Eigen::Index>(i), c) / std::sqrt(base.mass(i));
    }
    basis.emplace_back(base.space(), std::move(v));
  }
  return basis;
}

RealFunction project_onto(const Distribution& base, const RealFunction& f,
                          const std::vector<RealFunction>& basis) {
  require_same_space(base.space(), f.space());
  if (basis.empty()) throw std::invalid_argument("projection target basis is empty");
  const std::size_t n = base.size();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n),
                    static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    require_same_space(base.space(), basis[j].space());
    a.col(static_cast<Eigen::Index>(j)) = scaled(base, basis[j]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (static_cast<std::size_t>(qr.rank()) < basis.size()) {
    throw std::invalid_argument("projection basis is rank-deficient in L2(base)");
  }
  const Eigen::VectorXd coef = qr.solve(scaled(base, f));
  std::vector<double> v(n, 0.0);
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const double c = coef[static_cast<Eigen::Index>(j)];
    for (std::size_t i = 0; i < n; ++i) v[i] += c * basis[j][i];
  }
  return RealFunction(base.space(), std::move(v));
}

LipschitzProbeReport hellinger_lipschitz_probe(
    const ScalarFunctional& beta, const Distribution& base, std::size_t n_pairs,
    double radius, std::uint64_t seed, double bound,
    const std::function<bool(const Distribution&)>& admissible) {
  if (!beta.evaluate) throw std::invalid_argument("functional has no evaluator");
  if (!(radius > 0.0)) throw std::invalid_argument("probe radius must be positive");
  LipschitzProbeReport rep;
  rep.requested = n_pairs;
  rep.radius = radius;
  rep.bound = bound;

  auto draw = [&](rng::SplitMix64& gen) -> std::optional<Distribution> {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const ScoreFunction g = random_score(base, gen, 0.5);
      const Submodel sub = linear_tilt(base, g);
      const double norm = l2_norm(base, g.fn());
      if (norm <= 0.0) continue;
      double u = gen.uniform(-1.0, 1.0) *
                 std::min(0.9 * sub.t_max(), 2.0 * std::sqrt(2.0) * radius / norm);
      for (int shrink = 0; shrink < 60 && u != 0.0; ++shrink) {
        const Distribution cand = sub.at(u);
        if (hellinger(cand, base) <= radius && (!admissible || admissible(cand))) {
          return cand;
        }
        u *= 0.7;
      }
    }
    return std::nullopt;
  };

  for (std::size_t i = 0; i < n_pairs; ++i) {
    rng::SplitMix64 g1(rng::derive(seed, 2 * i));
    rng::SplitMix64 g2(rng::derive(seed, 2 * i + 1));
    const auto p1 = draw(g1);
    const auto p2 = draw(g2);
    if (!p1 || !p2) {
      ++rep.skipped;
      continue;
    }
    const double h = hellinger(*p1, *p2);
    if (h <= 1e-15) {
      ++rep.skipped;
      continue;
    }
    const double ratio = std::abs(beta.evaluate(*p1) - beta.evaluate(*p2)) / h;
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    ++rep.evaluated;
  }
  if (std::isfinite(bound)) rep.pass = rep.max_ratio <= bound;
  return rep;
}

}  // namespace ortho

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ortho/functional_calculus.hpp"
#include "ortho/model_core.hpp"
#include "ortho/submodel.hpp"

namespace ortho {

// Estimating function m(z; beta, eta) on a finite space: `evaluate` receives
// the atom index, the scalar parameter and the flattened nuisance vector.
struct EstimatingFunction {
  std::string name;
  std::size_t dim = 0;  // nuisance dimension
  std::function<double(std::size_t atom, double beta, const std::vector<double>& eta)>
      evaluate;
  // Optional admissibility predicate for nuisance vectors (defaults to all).
  std::function<bool(const std::vector<double>& eta)> admissible;

  bool is_admissible(const std::vector<double>& eta) const {
    return !admissible || admissible(eta);
  }
};

struct ParameterPair {
  double beta0 = 0.0;
  std::vector<double> eta0;
};

struct EngineTolerances {
  double deriv_rel = 1e-6;       // derivative comparisons (relative)
  double deriv_abs = 1e-9;       // ... with absolute floor
  double spec_tol = 1e-10;       // |E_P[m]| at correctly specified laws
  double neyman_tol = 1e-8;      // absolute bound on nuisance derivatives
  double id_tol = 1e-6;          // identity residuals
  double coord_tol = 1e-6;       // first-order conditions of coordinate paths
  double g_tol = 1e-6;           // |G + 1| in the reverse direction
  double g_degenerate = 1e-10;   // |G| below this counts as degenerate
};

// E_P[m(.; beta, eta)]
double expectation_m(const EstimatingFunction& m, const Distribution& p, double beta,
                     const std::vector<double>& eta);

// m(.; beta, eta) as a function on the atoms.
RealFunction m_as_function(const EstimatingFunction& m, const SpacePtr& space,
                           double beta, const std::vector<double>& eta);

// Evaluates beta and eta at the given distribution.
ParameterPair truth_at(const ScalarFunctional& beta, const NuisanceFunctional& eta,
                       const Distribution& p);

struct SpecificationReport {
  std::vector<double> residuals;  // E_P[m(.; beta(P), eta(P))] per sample
  double max_abs = 0.0;
  double tol = 0.0;
  bool pass = true;
};

// Checks E_P[m(.; beta(P), eta(P))] = 0 over the supplied laws.
SpecificationReport check_correct_specification(const EstimatingFunction& m,
                                                const ScalarFunctional& beta,
                                                const NuisanceFunctional& eta,
                                                const std::vector<Distribution>& samples,
                                                double tol = 1e-10);

// Random tilts of the base (coefficient radius <= `radius`), base included
// first; the standard sample set for specification checks.
std::vector<Distribution> specification_neighborhood(const Distribution& base,
                                                     std::size_t n = 20,
                                                     double radius = 0.1,
                                                     std::uint64_t seed = kDefaultSeed);

// Directional derivative of eta -> E_base[m(.; beta0, eta)] at eta0 in
// direction h, with the distribution held fixed.  Step scaled by
// max(1, |eta0|_inf); shrinks when eta0 + t h leaves the admissible set and
// throws std::domain_error when no admissible step exists.
double nuisance_gateaux(const EstimatingFunction& m, const Distribution& base,
                        const ParameterPair& at, const std::vector<double>& h);

struct NeymanReport {
  std::vector<std::pair<std::string, double>> derivatives;
  double max_abs = 0.0;
  double tol = 0.0;
  bool vacuous = false;  // no directions supplied
  bool pass = true;
};

// Orthogonality check: nuisance_gateaux must vanish in every direction.
NeymanReport check_neyman(const EstimatingFunction& m, const Distribution& base,
                          const ParameterPair& at,
                          const std::vector<std::pair<std::string, std::vector<double>>>&
                              directions,
                          double tol = 1e-8);

struct JacobianResult {
  double G = 0.0;
  bool degenerate = false;
};

// d/dbeta E_base[m(.; beta, eta0)] at beta0 (step scaled by max(1, |beta0|)).
JacobianResult jacobian_G(const EstimatingFunction& m, const Distribution& base,
                          const ParameterPair& at, double degenerate_tol = 1e-10);

struct CoordCheck {
  std::string name;
  double beta_rate_err = 0.0;  // |beta rate - expected|
  double eta_rate_err = 0.0;   // sup-norm deviation of the eta rate
  bool pass = false;
};

struct EquivalenceReport {
  std::string direction;  // "forward" or "reverse"
  double beta0 = 0.0;
  double G = std::numeric_limits<double>::quiet_NaN();
  bool G_degenerate = false;
  bool g_pass = true;  // reverse: |G+1| within tolerance
  SpecificationReport spec;
  InfluenceReport influence;
  double phi_mean = 0.0;
  std::optional<RealFunction> phi;
  std::vector<double> identity_residuals;
  double max_identity_residual = 0.0;
  bool identity_pass = true;
  NeymanReport neyman;
  std::vector<CoordCheck> coords;
  bool coords_pass = true;
  std::vector<std::string> notes;  // e.g. product-structure violations
  bool pass = false;
};

// Forward direction: from an orthogonal, correctly specified estimating
// function to a verified influence function.  Steps: specification check on a
// sampled neighborhood, Jacobian (abort when degenerate), candidate
// phi = -G^{-1} m(.; beta0, eta0), influence verification over the supplied
// scores, and the first-order identity
//   E_0[m0 s] + G * (dbeta/dt) + dE_0[m]/deta[deta/dt] = 0
// along every score's tilt.
EquivalenceReport forward_verify(const EstimatingFunction& m, const Distribution& base,
                                 const ScalarFunctional& beta,
                                 const NuisanceFunctional& eta,
                                 const std::vector<ScoreFunction>& scores,
                                 const EngineTolerances& tol = {},
                                 std::uint64_t seed = kDefaultSeed);

// Reverse direction: from a verified influence function m(.; beta0, eta0) and
// coordinate submodels to orthogonality.  Validates the coordinate paths'
// first-order conditions (beta rate 1 / eta rate 0 for the beta path; beta
// rate 0 / eta rate h for each nuisance path) and reports violations as
// product-structure failures; checks the identity
//   (1 + G) * (dbeta/dt) + dE_0[m]/deta[deta/dt] = 0
// on every coordinate path, G = -1, and the orthogonality of m in every
// supplied direction.
EquivalenceReport reverse_verify(
    const EstimatingFunction& m, const Distribution& base,
    const ScalarFunctional& beta, const NuisanceFunctional& eta,
    const Submodel& beta_coord,
    const std::vector<std::pair<std::vector<double>, Submodel>>& eta_coords,
    const EngineTolerances& tol = {}, std::size_t n_influence_scores = 25,
    std::uint64_t seed = kDefaultSeed);

// d/dt eta(P_t) at t = 0, coordinate-wise.
std::vector<double> eta_pathwise_rate(const NuisanceFunctional& eta, const Submodel& sub);

struct ChainRuleReport {
  std::vector<double> ts;
  std::vector<double> residuals;  // L2(P0) norm of the first-order mismatch
  double slope = 0.0;
  double residual_at_min_t = 0.0;
  bool pass = false;
};

// First-order expansion of f_t = m(.; beta(P_t), eta(P_t)) in L2(P0):
// the norm of (f_t - f_0)/t - [dm/dbeta * beta_rate + dm/deta[eta_rate]]
// must vanish linearly in t.
ChainRuleReport chain_rule_report(const EstimatingFunction& m, const Submodel& sub,
                                  const ScalarFunctional& beta,
                                  const NuisanceFunctional& eta,
                                  std::vector<double> t_grid = {});

// The residual norm at the smallest grid point.
double chain_rule_check(const EstimatingFunction& m, const Submodel& sub,
                        const ScalarFunctional& beta, const NuisanceFunctional& eta,
                        std::vector<double> t_grid = {});

struct GradCharReport {
  double fd_value = 0.0;     // d/dt E_0[D(.; beta(P_t), eta(P_t))]
  double inner_value = 0.0;  // -E_0[D(.; beta0, eta0) s]
  double err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

// Gradient characterization: the fixed-P0 derivative of the expected
// criterion along any path equals -E_0[D0 s].
GradCharReport gradient_characterization_check(const EstimatingFunction& D,
                                               const Distribution& base,
                                               const ScalarFunctional& beta,
                                               const NuisanceFunctional& eta,
                                               const Submodel& sub);

// Slope of beta' -> E_0[D(.; beta', eta0)] at beta0.  Under product structure
// this equals -1.  Requires Var_0(D(.; beta0, eta0)) > 0.
double negative_identity_check(const EstimatingFunction& D, const Distribution& base,
                               const ScalarFunctional& beta,
                               const NuisanceFunctional& eta);

}  // namespace ortho

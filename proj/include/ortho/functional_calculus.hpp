#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ortho/model_core.hpp"
#include "ortho/submodel.hpp"

namespace ortho {

inline constexpr double kOrthogonalityTol = 1e-10;
inline constexpr std::uint64_t kDefaultSeed = 20260825ull;

// Scalar statistical functional P -> R evaluated on explicit distributions.
struct ScalarFunctional {
  std::string name;
  std::function<double(const Distribution&)> evaluate;
};

// Vector-valued nuisance functional P -> R^d with coordinate labels.
// The evaluation order matches `labels`.
struct NuisanceFunctional {
  std::vector<std::string> labels;
  std::function<std::vector<double>(const Distribution&)> evaluate;
  std::size_t dim() const { return labels.size(); }
};

// A candidate influence function is a mean-zero function attached to the
// distribution it was derived at.
using InfluenceCandidate = ScoreFunction;

// d/dt beta(P_t) at t = 0 along the given path (central differences with one
// Richardson level; steps scaled into the path's valid range).
double pathwise_derivative(const ScalarFunctional& beta, const Submodel& sub);

// Gradient of beta at a full-support base: tilts the base along the centered
// indicator of every atom and divides the measured rate by the atom's mass.
// The result phi is centered and satisfies
//   d/dt beta(P_t)|_0 = E_0[phi s]  for every linear tilt with score s.
// Throws std::domain_error when the finite-difference estimates do not
// converge (the functional is not differentiable at the base).
RealFunction compute_eif(const ScalarFunctional& beta, const Distribution& base);

struct InfluenceRow {
  double lhs = 0.0;  // measured pathwise derivative
  double rhs = 0.0;  // E_0[phi s]
  double err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct InfluenceReport {
  std::vector<InfluenceRow> rows;
  double max_err = 0.0;
  bool pass = true;
};

// Checks the influence identity d/dt beta(P_{t,s})|_0 = E_0[phi s] for every
// supplied score, at relative tolerance `rel` with absolute floor `abs_floor`.
InfluenceReport verify_influence(const ScalarFunctional& beta,
                                 const InfluenceCandidate& phi,
                                 const std::vector<ScoreFunction>& scores,
                                 double rel = 1e-6, double abs_floor = 1e-9);

// Convenience: n random tilt directions drawn from `seed`.
InfluenceReport verify_influence(const ScalarFunctional& beta,
                                 const InfluenceCandidate& phi, std::size_t n_scores,
                                 std::uint64_t seed, double rel = 1e-6,
                                 double abs_floor = 1e-9);

// Dimension of the span of all linear-tilt scores at a full-support base
// (the mean-zero subspace; equals #atoms - 1).
std::size_t tangent_space_rank(const Distribution& base);

// Orthonormal basis (in L2(base)) of the subspace of mean-zero functions
// orthogonal to the functional's gradient: the directions that move the
// distribution without moving beta to first order.  Dimension is
// #atoms - 2 for a non-degenerate gradient, #atoms - 1 when the gradient
// vanishes.  Requires full support.
std::vector<RealFunction> nuisance_tangent_basis(const ScalarFunctional& beta,
                                                 const Distribution& base);

// L2(base) orthogonal projection of f onto span{basis}.  The basis must have
// full rank as a family in L2(base); the residual f - proj is orthogonal to
// every basis element within kOrthogonalityTol.
RealFunction project_onto(const Distribution& base, const RealFunction& f,
                          const std::vector<RealFunction>& basis);

struct LipschitzProbeReport {
  std::size_t requested = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;   // degenerate or inadmissible draws
  double max_ratio = 0.0;    // max |beta(P1)-beta(P2)| / H(P1,P2)
  double radius = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();
  bool pass = true;          // false only when a bound is given and exceeded
};

// Seeded Monte Carlo probe of |beta(P1) - beta(P2)| / H(P1, P2) over random
// pairs within Hellinger radius of the base.  Each pair uses its own derived
// substream, so the result does not depend on evaluation order.  An optional
// admissibility predicate restricts sampling (e.g. propensity margins); an
// optional bound turns the probe into a pass/fail check.
LipschitzProbeReport hellinger_lipschitz_probe(
    const ScalarFunctional& beta, const Distribution& base, std::size_t n_pairs,
    double radius, std::uint64_t seed,
    double bound = std::numeric_limits<double>::quiet_NaN(),
    const std::function<bool(const Distribution&)>& admissible = {});

}  // namespace ortho

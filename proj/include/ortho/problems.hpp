#pragma once

#include <string>
#include <vector>

#include "ortho/estimating_engine.hpp"
#include "ortho/functional_calculus.hpp"
#include "ortho/model_core.hpp"
#include "ortho/numeric.hpp"

namespace ortho::problems {

// A self-contained estimation problem: target functional, nuisance
// functional and estimating function on one space.
struct Problem {
  ScalarFunctional beta;
  NuisanceFunctional eta;
  EstimatingFunction m;
};

// The sharpness example: beta(P) = sum_z p(z)^2 nu(z) with the whole density
// as the nuisance, eta(P) = p, and m(z; beta, eta) = 2 eta(z) - 2 beta.
// m at the truth equals the gradient 2(p0 - beta0), so it passes influence
// verification, yet the nuisance derivative of E0[m] does not vanish: the
// problem is correctly specified and pathwise differentiable but not
// orthogonal, and d/dbeta E0[m] = -2 instead of -1.
inline Problem squared_density(const SpacePtr& space) {
  Problem pr;
  pr.beta.name = "squared_density";
  pr.beta.evaluate = [](const Distribution& p) {
    num::Acc acc;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc.add(p[i] * p[i] * p.space()->nu(i));
    }
    return acc.value();
  };
  for (std::size_t i = 0; i < space->size(); ++i) {
    pr.eta.labels.push_back("p[" + space->atom(i) + "]");
  }
  pr.eta.evaluate = [](const Distribution& p) { return p.p(); };
  pr.m.name = "two_eta_minus_two_beta";
  pr.m.dim = space->size();
  pr.m.evaluate = [](std::size_t atom, double beta, const std::vector<double>& eta) {
    return 2.0 * eta[atom] - 2.0 * beta;
  };
  return pr;
}

// The trivial orthogonal problem: beta(P) = E_P[f], no nuisance, and
// m(z; beta, eta) = f(z) - beta.  Orthogonality is vacuous and the influence
// function is f - E0[f].
inline Problem mean_of(const RealFunction& f) {
  Problem pr;
  pr.beta.name = "mean";
  pr.beta.evaluate = [f](const Distribution& p) { return expectation(p, f); };
  pr.m.name = "residual";
  pr.m.dim = 0;
  pr.m.evaluate = [f](std::size_t atom, double beta, const std::vector<double>&) {
    return f[atom] - beta;
  };
  return pr;
}

// Tangent directions for the density-valued nuisance eta(P) = p: for each
// atom k, the density rate p0 * c_k realized by tilting along the centered
// indicator c_k = 1{z=k} - P0({k}).
inline std::vector<std::pair<std::string, std::vector<double>>> density_directions(
    const Distribution& base) {
  std::vector<std::pair<std::string, std::vector<double>>> dirs;
  const std::size_t K = base.size();
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> h(K);
    for (std::size_t i = 0; i < K; ++i) {
      h[i] = base[i] * ((i == k ? 1.0 : 0.0) - base.mass(k));
    }
    dirs.emplace_back("tangent[" + base.space()->atom(k) + "]", std::move(h));
  }
  return dirs;
}

// The centered-indicator tilt of atom k; its density rate is the k-th
// density_directions entry.
inline Submodel density_coordinate_submodel(const Distribution& base, std::size_t k) {
  std::vector<double> c(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    c[i] = (i == k ? 1.0 : 0.0) - base.mass(k);
  }
  return linear_tilt(base, ScoreFunction(RealFunction(base.space(), std::move(c)), base));
}

}  // namespace ortho::problems

#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ortho/rng.hpp"

namespace ortho {

// Tolerances of the core invariants.
inline constexpr double kMassTol = 1e-12;      // |sum p*nu - 1|
inline constexpr double kMeanZeroTol = 1e-10;  // |E0[score]|
inline constexpr std::size_t kMaxAtoms = 1000000;

// Finite measurable space: a list of named atoms together with strictly
// positive base-measure weights nu.  Immutable after construction.
class SampleSpace {
 public:
  // atoms: at least two distinct non-empty names.
  // nu: one strictly positive finite weight per atom; empty means counting
  // measure (all weights 1).
  SampleSpace(std::vector<std::string> atoms, std::vector<double> nu);

  static std::shared_ptr<const SampleSpace> make(std::vector<std::string> atoms,
                                                 std::vector<double> nu = {});

  std::size_t size() const { return atoms_.size(); }
  const std::vector<std::string>& atoms() const { return atoms_; }
  const std::vector<double>& nu() const { return nu_; }
  double nu(std::size_t i) const { return nu_[i]; }
  const std::string& atom(std::size_t i) const { return atoms_[i]; }

  // Index of a named atom; throws std::invalid_argument when absent.
  std::size_t index_of(const std::string& atom) const;

  bool same_as(const SampleSpace& other) const;

 private:
  std::vector<std::string> atoms_;
  std::vector<double> nu_;
  std::unordered_map<std::string, std::size_t> index_;
};

using SpacePtr = std::shared_ptr<const SampleSpace>;

// Real-valued function on the atoms of a space.  Immutable.
class RealFunction {
 public:
  RealFunction(SpacePtr space, std::vector<double> values);

  const SpacePtr& space() const { return space_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  double sup_norm() const;

 private:
  SpacePtr space_;
  std::vector<double> values_;
};

// Probability distribution on a space: p >= 0 with sum(p*nu) = 1 within
// kMassTol.  Immutable.
class Distribution {
 public:
  Distribution(SpacePtr space, std::vector<double> p);

  const SpacePtr& space() const { return space_; }
  const std::vector<double>& p() const { return p_; }
  double operator[](std::size_t i) const { return p_[i]; }
  std::size_t size() const { return p_.size(); }
  // true iff every atom has strictly positive mass
  bool full_support() const { return full_support_; }
  // p(i)*nu(i): probability carried by atom i
  double mass(std::size_t i) const;

 private:
  SpacePtr space_;
  std::vector<double> p_;
  bool full_support_ = false;
};

// A function that is mean zero under a designated base distribution
// (|E_base[f]| <= kMeanZeroTol, enforced at construction).
class ScoreFunction {
 public:
  ScoreFunction(RealFunction fn, Distribution base);

  const RealFunction& fn() const { return fn_; }
  const Distribution& base() const { return base_; }
  double sup_norm() const { return fn_.sup_norm(); }

 private:
  RealFunction fn_;
  Distribution base_;
};

// Throws std::invalid_argument unless both objects live on the same space
// (shared instance or structurally equal).
void require_same_space(const SpacePtr& a, const SpacePtr& b);

// E_p[f] = sum_z f(z) p(z) nu(z), compensated summation.
double expectation(const Distribution& p, const RealFunction& f);

// <f, g>_{L2(p)} = E_p[f g]
double inner_product(const Distribution& p, const RealFunction& f,
                     const RealFunction& g);

// sqrt(<f, f>_{L2(p)})
double l2_norm(const Distribution& p, const RealFunction& f);

// f - E_p[f], packaged with its base distribution.
ScoreFunction center(const Distribution& p, const RealFunction& f);

// Hellinger distance H(p1, p2) = sqrt( (1/2) sum_z (sqrt p1 - sqrt p2)^2 nu ).
double hellinger(const Distribution& p1, const Distribution& p2);

// Total variation sum_z |p1 - p2| nu.
double total_variation(const Distribution& p1, const Distribution& p2);

// Random full-support distribution: p proportional to floor + U(0,1) per atom.
Distribution random_distribution(const SpacePtr& space, rng::SplitMix64& gen,
                                 double floor = 0.05);

// Random score: uniform values on [-1, 1], centered under `base`, then scaled
// to the requested sup norm.
ScoreFunction random_score(const Distribution& base, rng::SplitMix64& gen,
                           double sup_norm = 0.5);

}  // namespace ortho

#include "ortho/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ortho/numeric.hpp"

namespace ortho {

namespace {

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + " contains a non-finite entry");
    }
  }
}

}  // namespace

SampleSpace::SampleSpace(std::vector<std::string> atoms, std::vector<double> nu)
    : atoms_(std::move(atoms)), nu_(std::move(nu)) {
  if (atoms_.size() < 2) {
    throw std::invalid_argument("sample space needs at least two atoms");
  }
  if (atoms_.size() > kMaxAtoms) {
    throw std::invalid_argument("sample space exceeds the supported atom count");
  }
  if (nu_.empty()) {
    nu_.assign(atoms_.size(), 1.0);
  }
  if (nu_.size() != atoms_.size()) {
    throw std::invalid_argument("nu has " + std::to_string(nu_.size()) +
                                " entries, expected " + std::to_string(atoms_.size()));
  }
  for (double w : nu_) {
    if (!std::isfinite(w) || w <= 0.0) {
      throw std::invalid_argument("nu entries must be strictly positive and finite");
    }
  }
  index_.reserve(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i].empty()) {
      throw std::invalid_argument("atom names must be non-empty");
    }
    if (!index_.emplace(atoms_[i], i).second) {
      throw std::invalid_argument("duplicate atom name '" + atoms_[i] + "'");
    }
  }
}

std::shared_ptr<const SampleSpace> SampleSpace::make(std::vector<std::string> atoms,
                                                     std::vector<double> nu) {
  return std::make_shared<const SampleSpace>(std::move(atoms), std::move(nu));
}

std::size_t SampleSpace::index_of(const std::string& atom) const {
  auto it = index_.find(atom);
  if (it == index_.end()) {
    throw std::invalid_argument("unknown atom '" + atom + "'");
  }
  return it->second;
}

bool SampleSpace::same_as(const SampleSpace& other) const {
  return this == &other || (atoms_ == other.atoms_ && nu_ == other.nu_);
}

void require_same_space(const SpacePtr& a, const SpacePtr& b) {
  if (a == b) return;
  if (!a || !b || !a->same_as(*b)) {
    throw std::invalid_argument("objects live on different sample spaces");
  }
}

RealFunction::RealFunction(SpacePtr space, std::vector<double> values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw std::invalid_argument("null sample space");
  if (values_.size() != space_->size()) {
    throw std::invalid_argument("function has " + std::to_string(values_.size()) +
                                " values, expected " + std::to_string(space_->size()));
  }
  check_finite(values_, "function");
}

double RealFunction::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Distribution::Distribution(SpacePtr space, std::vector<double> p)
    : space_(std::move(space)), p_(std::move(p)) {
  if (!space_) throw std::invalid_argument("null sample space");
  if (p_.size() != space_->size()) {
    throw std::invalid_argument("distribution has " + std::to_string(p_.size()) +
                                " entries, expected " + std::to_string(space_->size()));
  }
  check_finite(p_, "distribution");
  num::Acc total;
  full_support_ = true;
  for (std::size_t i = 0; i < p_.size(); ++i) {
    if (p_[i] < 0.0) {
      throw std::invalid_argument("distribution has a negative entry at atom '" +
                                  space_->atom(i) + "'");
    }
    if (p_[i] == 0.0) full_support_ = false;
    total.add(p_[i] * space_->nu(i));
  }
  if (std::abs(total.value() - 1.0) > kMassTol) {
    throw std::invalid_argument("distribution mass " + std::to_string(total.value()) +
                                " deviates from 1 beyond tolerance");
  }
}

double Distribution::mass(std::size_t i) const { return p_[i] * space_->nu(i); }

ScoreFunction::ScoreFunction(RealFunction fn, Distribution base)
    : fn_(std::move(fn)), base_(std::move(base)) {
  require_same_space(fn_.space(), base_.space());
  const double mean = expectation(base_, fn_);
  if (std::abs(mean) > kMeanZeroTol) {
    throw std::invalid_argument("score has mean " + std::to_string(mean) +
                                " under its base distribution (not mean zero)");
  }
}

double expectation(const Distribution& p, const RealFunction& f) {
  require_same_space(p.space(), f.space());
  num::Acc acc;
  const auto& nu = p.space()->nu();
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc.add(f[i] * p[i] * nu[i]);
  }
  return acc.value();
}

double inner_product(const Distribution& p, const RealFunction& f,
                     const RealFunction& g) {
  require_same_space(p.space(), f.space());
  require_same_space(p.space(), g.space());
  num::Acc acc;
  const auto& nu = p.space()->nu();
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc.add(f[i] * g[i] * p[i] * nu[i]);
  }
  return acc.value();
}

double l2_norm(const Distribution& p, const RealFunction& f) {
  return std::sqrt(std::max(0.0, inner_product(p, f, f)));
}

ScoreFunction center(const Distribution& p, const RealFunction& f) {
  const double mean = expectation(p, f);
  std::vector<double> v = f.values();
  for (double& x : v) x -= mean;
  return ScoreFunction(RealFunction(f.space(), std::move(v)), p);
}

double hellinger(const Distribution& p1, const Distribution& p2) {
  require_same_space(p1.space(), p2.space());
  num::Acc acc;
  const auto& nu = p1.space()->nu();
  for (std::size_t i = 0; i < p1.size(); ++i) {
    const double d = std::sqrt(p1[i]) - std::sqrt(p2[i]);
    acc.add(d * d * nu[i]);
  }
  return std::sqrt(0.5 * std::max(0.0, acc.value()));
}

double total_variation(const Distribution& p1, const Distribution& p2) {
  require_same_space(p1.space(), p2.space());
  num::Acc acc;
  const auto& nu = p1.space()->nu();
  for (std::size_t i = 0; i < p1.size(); ++i) {
    acc.add(std::abs(p1[i] - p2[i]) * nu[i]);
  }
  return acc.value();
}

Distribution random_distribution(const SpacePtr& space, rng::SplitMix64& gen,
                                 double floor) {
  const std::size_t n = space->size();
  std::vector<double> p(n);
  num::Acc total;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = floor + gen.uniform();
    total.add(p[i] * space->nu(i));
  }
  const double t = total.value();
  for (double& x : p) x /= t;
  // Absorb the remaining rounding error into the largest entry so the mass
  // check holds exactly.
  num::Acc check;
  for (std::size_t i = 0; i < n; ++i) check.add(p[i] * space->nu(i));
  const std::size_t imax = static_cast<std::size_t>(
      std::max_element(p.begin(), p.end()) - p.begin());
  p[imax] -= (check.value() - 1.0) / space->nu(imax);
  return Distribution(space, std::move(p));
}

ScoreFunction random_score(const Distribution& base, rng::SplitMix64& gen,
                           double sup_norm) {
  const std::size_t n = base.size();
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<double> v(n);
    for (double& x : v) x = gen.uniform(-1.0, 1.0);
    RealFunction f(base.space(), std::move(v));
    const double mean = expectation(base, f);
    std::vector<double> c = f.values();
    for (double& x : c) x -= mean;
    double sup = 0.0;
    for (double x : c) sup = std::max(sup, std::abs(x));
    if (sup < 1e-12) continue;  // degenerate draw; retry
    const double scale = sup_norm / sup;
    for (double& x : c) x *= scale;
    return ScoreFunction(RealFunction(base.space(), std::move(c)), base);
  }
  throw std::domain_error("could not draw a non-degenerate random score");
}

}  // namespace ortho

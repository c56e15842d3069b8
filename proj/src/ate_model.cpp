#include "ortho/ate_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ortho/errors.hpp"
#include "ortho/model_io.hpp"
#include "ortho/numeric.hpp"
#include "ortho/report.hpp"

namespace ortho::ate {

namespace {

void require_probability_vector(const std::vector<double>& v, const char* what) {
  num::Acc sum;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) {
      throw std::invalid_argument(std::string(what) + " has a negative or non-finite entry");
    }
    sum.add(x);
  }
  if (std::abs(sum.value() - 1.0) > kMassTol) {
    throw std::invalid_argument(std::string(what) + " does not sum to 1");
  }
}

struct CellStats {
  double mass = 0.0;
  double mean = 0.0;
};

}  // namespace

ATESpecData load_ate_spec(const std::string& path) {
  const auto f = io::KeyValueFile::parse(
      path, {"x.probs", "pi", "y.support", "y.cond.a1", "y.cond.a0", "epsilon", "c_y",
             "sigma2_min"});
  ATESpecData s;
  s.x_probs = f.reals("x.probs");
  s.pi = f.reals("pi");
  s.y_support = f.reals("y.support");
  s.y_cond_a1 = f.real_matrix("y.cond.a1");
  s.y_cond_a0 = f.real_matrix("y.cond.a0");
  if (s.pi.size() != s.x_probs.size()) {
    throw io_error(path, f.line_of("pi"),
                   "pi has " + std::to_string(s.pi.size()) + " entries, expected " +
                       std::to_string(s.x_probs.size()));
  }
  auto check_matrix = [&](const char* key, const std::vector<std::vector<double>>& m) {
    if (m.size() != s.x_probs.size()) {
      throw io_error(path, f.line_of(key),
                     std::string(key) + " has " + std::to_string(m.size()) +
                         " rows, expected " + std::to_string(s.x_probs.size()));
    }
    for (const auto& row : m) {
      if (row.size() != s.y_support.size()) {
        throw io_error(path, f.line_of(key),
                       std::string(key) + " row has " + std::to_string(row.size()) +
                           " entries, expected " + std::to_string(s.y_support.size()));
      }
    }
  };
  check_matrix("y.cond.a1", s.y_cond_a1);
  check_matrix("y.cond.a0", s.y_cond_a0);
  if (f.has("epsilon")) s.epsilon = f.real("epsilon");
  if (f.has("c_y")) s.c_y = f.real("c_y");
  if (f.has("sigma2_min")) s.sigma2_min = f.real("sigma2_min");
  return s;
}

std::size_t ATEModel::atom_index(std::size_t x, int a, std::size_t yk) const {
  return (x * 2 + static_cast<std::size_t>(a)) * ny_ + yk;
}

void ATEModel::decode(std::size_t atom, std::size_t& x, int& a, std::size_t& yk) const {
  yk = atom % ny_;
  const std::size_t cell = atom / ny_;
  a = static_cast<int>(cell % 2);
  x = cell / 2;
}

double ATEModel::epsilon() const { return spec_.epsilon.value_or(0.05); }

double ATEModel::c_y() const {
  if (spec_.c_y) return *spec_.c_y;
  double m = 0.0;
  for (double y : spec_.y_support) m = std::max(m, std::abs(y));
  return m;
}

double ATEModel::sigma2_min() const { return spec_.sigma2_min.value_or(0.0); }

std::vector<double> ATEModel::eta_truth() const {
  std::vector<double> eta;
  eta.reserve(3 * nx_);
  eta.insert(eta.end(), truth_.mu1.begin(), truth_.mu1.end());
  eta.insert(eta.end(), truth_.mu0.begin(), truth_.mu0.end());
  eta.insert(eta.end(), truth_.pi.begin(), truth_.pi.end());
  return eta;
}

std::vector<std::string> ATEModel::eta_labels() const {
  std::vector<std::string> labels;
  labels.reserve(3 * nx_);
  for (const char* base : {"mu1", "mu0", "pi"}) {
    for (std::size_t x = 0; x < nx_; ++x) {
      labels.push_back(std::string(base) + "[x" + std::to_string(x) + "]");
    }
  }
  return labels;
}

ATEModel ATEModel::build(const ATESpecData& spec) {
  ATEModel m;
  m.spec_ = spec;
  m.nx_ = spec.x_probs.size();
  m.ny_ = spec.y_support.size();
  if (m.nx_ == 0) throw std::invalid_argument("x.probs is empty");
  if (m.ny_ == 0) throw std::invalid_argument("y.support is empty");

  require_probability_vector(spec.x_probs, "x.probs");
  for (double p : spec.x_probs) {
    if (p <= 0.0) {
      throw std::invalid_argument("x.probs entries must be strictly positive");
    }
  }
  if (spec.pi.size() != m.nx_) {
    throw std::invalid_argument("pi has " + std::to_string(spec.pi.size()) +
                                " entries, expected " + std::to_string(m.nx_));
  }
  for (double p : spec.pi) {
    if (!std::isfinite(p) || p <= 0.0 || p >= 1.0) {
      throw std::invalid_argument(
          "(R1) violated: propensity must lie strictly inside (0, 1)");
    }
  }
  {
    std::set<double> distinct(spec.y_support.begin(), spec.y_support.end());
    if (distinct.size() != m.ny_) {
      throw std::invalid_argument("y.support values must be distinct");
    }
    for (double y : spec.y_support) {
      if (!std::isfinite(y)) throw std::invalid_argument("y.support must be finite");
    }
  }
  auto check_cond = [&](const char* key, const std::vector<std::vector<double>>& rows) {
    if (rows.size() != m.nx_) {
      throw std::invalid_argument(std::string(key) + " has " +
                                  std::to_string(rows.size()) + " rows, expected " +
                                  std::to_string(m.nx_));
    }
    for (const auto& row : rows) {
      if (row.size() != m.ny_) {
        throw std::invalid_argument(std::string(key) + " row has " +
                                    std::to_string(row.size()) +
                                    " entries, expected " + std::to_string(m.ny_));
      }
      require_probability_vector(row, key);
    }
  };
  check_cond("y.cond.a1", spec.y_cond_a1);
  check_cond("y.cond.a0", spec.y_cond_a0);
  if (spec.epsilon && !(*spec.epsilon > 0.0 && *spec.epsilon < 0.5)) {
    throw std::invalid_argument("epsilon must lie in (0, 0.5)");
  }
  if (spec.c_y && !(*spec.c_y > 0.0)) {
    throw std::invalid_argument("c_y must be positive");
  }
  if (spec.sigma2_min && !(*spec.sigma2_min >= 0.0)) {
    throw std::invalid_argument("sigma2_min must be non-negative");
  }

  // True nuisance values.
  auto cell_moments = [&](const std::vector<double>& row, double& mean, double& var) {
    num::Acc m1;
    for (std::size_t k = 0; k < m.ny_; ++k) m1.add(spec.y_support[k] * row[k]);
    mean = m1.value();
    num::Acc v;
    for (std::size_t k = 0; k < m.ny_; ++k) {
      const double d = spec.y_support[k] - mean;
      v.add(d * d * row[k]);
    }
    var = v.value();
  };
  ATENuisances& t = m.truth_;
  t.pi = spec.pi;
  t.mu1.resize(m.nx_);
  t.mu0.resize(m.nx_);
  t.tau.resize(m.nx_);
  t.sigma2_a1.resize(m.nx_);
  t.sigma2_a0.resize(m.nx_);
  for (std::size_t x = 0; x < m.nx_; ++x) {
    cell_moments(spec.y_cond_a1[x], t.mu1[x], t.sigma2_a1[x]);
    cell_moments(spec.y_cond_a0[x], t.mu0[x], t.sigma2_a0[x]);
    t.tau[x] = t.mu1[x] - t.mu0[x];
    if (t.sigma2_a1[x] <= 0.0 || t.sigma2_a0[x] <= 0.0) {
      throw std::invalid_argument(
          "(R3) violated: conditional outcome variance is zero at covariate level " +
          std::to_string(x));
    }
  }
  {
    num::Acc b;
    for (std::size_t x = 0; x < m.nx_; ++x) b.add(spec.x_probs[x] * t.tau[x]);
    t.beta0 = b.value();
    num::Acc v;
    for (std::size_t x = 0; x < m.nx_; ++x) {
      const double d = t.tau[x] - t.beta0;
      v.add(spec.x_probs[x] * d * d);
    }
    t.var_tau = v.value();
    if (t.var_tau <= 0.0) {
      throw std::invalid_argument(
          "(R4) violated: treatment effect variance is zero (tau is constant)");
    }
  }

  // Flattened space and joint law.
  std::vector<std::string> atoms(m.nx_ * 2 * m.ny_);
  std::vector<double> p(atoms.size());
  for (std::size_t x = 0; x < m.nx_; ++x) {
    for (int a = 0; a < 2; ++a) {
      const double pa = a == 1 ? spec.pi[x] : 1.0 - spec.pi[x];
      const auto& row = a == 1 ? spec.y_cond_a1[x] : spec.y_cond_a0[x];
      for (std::size_t k = 0; k < m.ny_; ++k) {
        const std::size_t idx = (x * 2 + static_cast<std::size_t>(a)) * m.ny_ + k;
        atoms[idx] = "x" + std::to_string(x) + ".a" + std::to_string(a) + ".y" +
                     std::to_string(k);
        p[idx] = spec.x_probs[x] * pa * row[k];
      }
    }
  }
  // Absorb accumulated input rounding into the largest atom so the joint mass
  // is exactly 1.
  num::Acc mass;
  for (double v : p) mass.add(v);
  const std::size_t imax =
      static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  p[imax] -= mass.value() - 1.0;
  m.space_ = SampleSpace::make(std::move(atoms));
  m.joint_.emplace(m.space_, std::move(p));
  return m;
}

namespace {

// Per-covariate conditional statistics recomputed from an arbitrary law on
// the flattened space.
struct Recomputed {
  std::vector<double> px, pi, mu1, mu0;
};

Recomputed recompute(const ATEModel& model, const Distribution& p) {
  require_same_space(model.space(), p.space());
  const std::size_t nx = model.nx(), ny = model.ny();
  Recomputed r;
  r.px.resize(nx);
  r.pi.resize(nx);
  r.mu1.resize(nx);
  r.mu0.resize(nx);
  for (std::size_t x = 0; x < nx; ++x) {
    CellStats cell[2];
    for (int a = 0; a < 2; ++a) {
      num::Acc mass, ysum;
      for (std::size_t k = 0; k < ny; ++k) {
        const double w = p[model.atom_index(x, a, k)];
        mass.add(w);
        ysum.add(model.y_value(k) * w);
      }
      cell[a].mass = mass.value();
      if (cell[a].mass <= 0.0) {
        throw std::domain_error("conditional support lost: cell (x" +
                                std::to_string(x) + ", a" + std::to_string(a) +
                                ") has no mass");
      }
      cell[a].mean = ysum.value() / cell[a].mass;
    }
    r.px[x] = cell[0].mass + cell[1].mass;
    r.pi[x] = cell[1].mass / r.px[x];
    r.mu1[x] = cell[1].mean;
    r.mu0[x] = cell[0].mean;
  }
  return r;
}

}  // namespace

ScalarFunctional beta_functional(const ATEModel& model) {
  return ScalarFunctional{
      "ate",
      [model](const Distribution& p) {
        const Recomputed r = recompute(model, p);
        num::Acc b;
        for (std::size_t x = 0; x < model.nx(); ++x) {
          b.add(r.px[x] * (r.mu1[x] - r.mu0[x]));
        }
        return b.value();
      }};
}

NuisanceFunctional eta_functional(const ATEModel& model) {
  return NuisanceFunctional{
      model.eta_labels(),
      [model](const Distribution& p) {
        const Recomputed r = recompute(model, p);
        std::vector<double> eta;
        eta.reserve(3 * model.nx());
        eta.insert(eta.end(), r.mu1.begin(), r.mu1.end());
        eta.insert(eta.end(), r.mu0.begin(), r.mu0.end());
        eta.insert(eta.end(), r.pi.begin(), r.pi.end());
        return eta;
      }};
}

EstimatingFunction ate_m(const ATEModel& model) {
  const std::size_t nx = model.nx();
  EstimatingFunction m;
  m.name = "ate_dr";
  m.dim = 3 * nx;
  m.evaluate = [model, nx](std::size_t atom, double beta,
                           const std::vector<double>& eta) {
    std::size_t x, yk;
    int a;
    model.decode(atom, x, a, yk);
    const double y = model.y_value(yk);
    const double mu1 = eta[x];
    const double mu0 = eta[nx + x];
    const double pi = eta[2 * nx + x];
    const double ipw = a == 1 ? (y - mu1) / pi : -(y - mu0) / (1.0 - pi);
    return ipw + mu1 - mu0 - beta;
  };
  m.admissible = [nx](const std::vector<double>& eta) {
    if (eta.size() != 3 * nx) return false;
    for (std::size_t x = 0; x < nx; ++x) {
      const double pi = eta[2 * nx + x];
      if (!(pi >= kPiFloor && pi <= 1.0 - kPiFloor)) return false;
    }
    return true;
  };
  return m;
}

RealFunction ate_phi(const ATEModel& model) {
  return m_as_function(ate_m(model), model.space(), model.truth().beta0,
                       model.eta_truth());
}

Submodel beta_coordinate_submodel(const ATEModel& model) {
  const ATENuisances& t = model.truth();
  std::vector<double> g(model.space()->size());
  for (std::size_t atom = 0; atom < g.size(); ++atom) {
    std::size_t x, yk;
    int a;
    model.decode(atom, x, a, yk);
    g[atom] = (t.tau[x] - t.beta0) / t.var_tau;
  }
  const ScoreFunction score =
      center(model.joint(), RealFunction(model.space(), std::move(g)));
  return linear_tilt(model.joint(), score);
}

Submodel eta_coordinate_submodel(const ATEModel& model, const std::vector<double>& h1,
                                 const std::vector<double>& h0,
                                 const std::vector<double>& hpi) {
  const std::size_t nx = model.nx();
  if (h1.size() != nx || h0.size() != nx || hpi.size() != nx) {
    throw std::invalid_argument("nuisance direction length must match the number of "
                                "covariate levels");
  }
  const ATENuisances& t = model.truth();
  num::Acc a0;
  for (std::size_t x = 0; x < nx; ++x) {
    a0.add(model.spec().x_probs[x] * (h1[x] - h0[x]));
  }
  const double alpha0 = -a0.value();
  std::vector<double> s(model.space()->size());
  for (std::size_t atom = 0; atom < s.size(); ++atom) {
    std::size_t x, yk;
    int a;
    model.decode(atom, x, a, yk);
    const double y = model.y_value(yk);
    const double regression =
        a == 1 ? h1[x] * (y - t.mu1[x]) / t.sigma2_a1[x]
               : h0[x] * (y - t.mu0[x]) / t.sigma2_a0[x];
    const double propensity =
        hpi[x] * (static_cast<double>(a) - t.pi[x]) / (t.pi[x] * (1.0 - t.pi[x]));
    const double effect = alpha0 * (t.tau[x] - t.beta0) / t.var_tau;
    s[atom] = regression + propensity + effect;
  }
  const ScoreFunction score =
      center(model.joint(), RealFunction(model.space(), std::move(s)));
  return linear_tilt(model.joint(), score);
}

std::vector<std::pair<std::string, std::vector<double>>> canonical_directions(
    const ATEModel& model) {
  const auto labels = model.eta_labels();
  std::vector<std::pair<std::string, std::vector<double>>> dirs;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    std::vector<double> h(labels.size(), 0.0);
    h[j] = 1.0;
    dirs.emplace_back(labels[j], std::move(h));
  }
  return dirs;
}

SweepDirection default_sweep_direction(const ATEModel& model) {
  const std::size_t nx = model.nx();
  SweepDirection d;
  d.h1.resize(nx);
  d.h0.resize(nx);
  d.hpi.resize(nx);
  double sup = 0.0;
  for (std::size_t x = 0; x < nx; ++x) {
    d.h1[x] = std::sin(static_cast<double>(x) + 1.0);
    d.h0[x] = -d.h1[x];
    d.hpi[x] = 0.5 * std::cos(static_cast<double>(x) + 1.0);
    sup = std::max({sup, std::abs(d.h1[x]), std::abs(d.hpi[x])});
  }
  for (std::size_t x = 0; x < nx; ++x) {
    d.h1[x] /= sup;
    d.h0[x] /= sup;
    d.hpi[x] /= sup;
  }
  return d;
}

SweepReport bias_sweep(const ATEModel& model, const std::vector<double>& eps_list,
                       bool population, std::size_t n, std::size_t reps,
                       std::uint64_t seed, const std::optional<SweepDirection>& direction) {
  if (eps_list.empty()) throw std::invalid_argument("eps list is empty");
  for (double e : eps_list) {
    if (!(e >= 0.0) || !std::isfinite(e)) {
      throw std::invalid_argument("eps values must be non-negative");
    }
  }
  if (!population && (n == 0 || reps == 0)) {
    throw std::invalid_argument("sampled sweep needs n > 0 and reps > 0");
  }
  const SweepDirection dir = direction.value_or(default_sweep_direction(model));
  const std::size_t nx = model.nx();
  if (dir.h1.size() != nx || dir.h0.size() != nx || dir.hpi.size() != nx) {
    throw std::invalid_argument("sweep direction length must match the number of "
                                "covariate levels");
  }
  const EstimatingFunction m = ate_m(model);
  const std::vector<double> eta0 = model.eta_truth();
  const double beta0 = model.truth().beta0;

  auto perturbed = [&](double eps) {
    std::vector<double> eta = eta0;
    for (std::size_t x = 0; x < nx; ++x) {
      eta[x] += eps * dir.h1[x];
      eta[nx + x] += eps * dir.h0[x];
      eta[2 * nx + x] += eps * dir.hpi[x];
      const double pi = eta[2 * nx + x];
      if (!(pi >= kPiFloor && pi <= 1.0 - kPiFloor)) {
        throw std::domain_error("(R1) perturbation exits positivity bounds at eps = " +
                                std::to_string(eps));
      }
    }
    return eta;
  };

  // Inverse-CDF table over the flattened atoms (counting measure: mass = p).
  std::vector<double> cum(model.joint().size());
  {
    num::Acc acc;
    for (std::size_t i = 0; i < cum.size(); ++i) {
      acc.add(model.joint().mass(i));
      cum[i] = acc.value();
    }
    cum.back() = 1.0;
  }
  auto draw_atom = [&](rng::SplitMix64& gen) {
    const double u = gen.uniform();
    return static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
  };

  SweepReport rep;
  rep.population = population;
  rep.n = population ? 0 : n;
  rep.reps = population ? 1 : reps;
  rep.seed = seed;
  std::vector<double> orth_abs, plugin_abs;

  for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
    const double eps = eps_list[ei];
    const std::vector<double> eta = perturbed(eps);
    SweepRow orth{"orthogonal", eps, rep.n, rep.reps, 0.0, 0.0, 0.0};
    SweepRow plug{"plugin", eps, rep.n, rep.reps, 0.0, 0.0, 0.0};
    if (population) {
      // The estimating function is linear in beta with slope -1, so the root
      // of E[m(.; beta, eta)] = 0 is E[m(.; 0, eta)].
      orth.mean_bias = expectation_m(m, model.joint(), 0.0, eta) - beta0;
      num::Acc pb;
      for (std::size_t x = 0; x < nx; ++x) {
        pb.add(model.spec().x_probs[x] * (eta[x] - eta[nx + x]));
      }
      plug.mean_bias = pb.value() - beta0;
    } else {
      std::vector<double> ob(reps), pb(reps);
      for (std::size_t r = 0; r < reps; ++r) {
        rng::SplitMix64 gen(rng::derive(seed, ei * reps + r));
        num::Acc om, pm;
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t atom = draw_atom(gen);
          om.add(m.evaluate(atom, 0.0, eta));
          std::size_t x, yk;
          int a;
          model.decode(atom, x, a, yk);
          pm.add(eta[x] - eta[nx + x]);
        }
        ob[r] = om.value() / static_cast<double>(n) - beta0;
        pb[r] = pm.value() / static_cast<double>(n) - beta0;
      }
      auto mean_se = [reps](const std::vector<double>& v, double& mean, double& se) {
        num::Acc s;
        for (double x : v) s.add(x);
        mean = s.value() / static_cast<double>(reps);
        if (reps < 2) {
          se = 0.0;
          return;
        }
        num::Acc q;
        for (double x : v) q.add((x - mean) * (x - mean));
        se = std::sqrt(q.value() / static_cast<double>(reps - 1)) /
             std::sqrt(static_cast<double>(reps));
      };
      mean_se(ob, orth.mean_bias, orth.se);
      mean_se(pb, plug.mean_bias, plug.se);
    }
    orth.abs_bias = std::abs(orth.mean_bias);
    plug.abs_bias = std::abs(plug.mean_bias);
    orth_abs.push_back(orth.abs_bias);
    plugin_abs.push_back(plug.abs_bias);
    rep.rows.push_back(orth);
    rep.rows.push_back(plug);
  }

  rep.orth_slope = num::loglog_slope(eps_list, orth_abs);
  rep.plugin_slope = num::loglog_slope(eps_list, plugin_abs);
  if (population) {
    rep.slopes_checked = true;
    rep.pass = rep.orth_slope >= rep.orth_lo && rep.orth_slope <= rep.orth_hi &&
               rep.plugin_slope >= rep.plugin_lo && rep.plugin_slope <= rep.plugin_hi;
  }
  return rep;
}

std::string sweep_to_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "estimator,eps,n,reps,mean_bias,se,abs_bias\n";
  for (const auto& r : report.rows) {
    out << r.estimator << "," << format_double(r.eps) << "," << r.n << "," << r.reps
        << "," << format_double(r.mean_bias) << "," << format_double(r.se) << ","
        << format_double(r.abs_bias) << "\n";
  }
  out << "orthogonal_slope,,,," << format_double(report.orth_slope) << ",,\n";
  out << "plugin_slope,,,," << format_double(report.plugin_slope) << ",,\n";
  return out.str();
}

RegularityReport check_regularity(const ATEModel& model) {
  const ATENuisances& t = model.truth();
  const double eps = model.epsilon();
  const double cy = model.c_y();
  const double s2min = model.sigma2_min();
  RegularityReport rep;

  double overlap = std::numeric_limits<double>::infinity();
  for (double pi : t.pi) {
    overlap = std::min({overlap, pi - eps, (1.0 - eps) - pi});
  }
  rep.rows.push_back({"R1.overlap_margin", overlap, 0.0, ">= 0", overlap >= 0.0});

  double ymax = 0.0;
  for (double y : model.spec().y_support) ymax = std::max(ymax, std::abs(y));
  rep.rows.push_back({"R2.outcome_bound", ymax, cy, "<= c_y", ymax <= cy});

  double s2 = std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < model.nx(); ++x) {
    s2 = std::min({s2, t.sigma2_a1[x], t.sigma2_a0[x]});
  }
  rep.rows.push_back({"R3.min_conditional_variance", s2, s2min,
                      ">= sigma2_min, > 0", s2 > 0.0 && s2 >= s2min});

  rep.rows.push_back({"R4.effect_variance", t.var_tau, 0.0, "> 0", t.var_tau > 0.0});

  rep.lipschitz_c = 4.0 * std::sqrt(2.0) * cy * (1.0 + 1.0 / eps);
  rep.rows.push_back({"hellinger_lipschitz_c", rep.lipschitz_c, 0.0, "(info)", true});

  for (const auto& r : rep.rows) rep.pass = rep.pass && r.pass;
  return rep;
}

std::function<bool(const Distribution&)> admissible_predicate(const ATEModel& model) {
  const double eps = model.epsilon();
  return [model, eps](const Distribution& p) {
    try {
      const Recomputed r = recompute(model, p);
      for (double pi : r.pi) {
        if (!(pi >= eps && pi <= 1.0 - eps)) return false;
      }
      return true;
    } catch (const std::domain_error&) {
      return false;  // a cell lost all mass
    }
  };
}

}  // namespace ortho::ate

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace ortho::num {

// Finite-difference policy used everywhere a derivative is estimated
// numerically: central differences at steps {1e-3, 5e-4, 2.5e-4} (times a
// caller-provided scale) combined with one Richardson extrapolation level.
inline constexpr double kStep0 = 1e-3;

// Default derivative tolerance: relative with an absolute floor.
inline constexpr double kDerivRel = 1e-6;
inline constexpr double kDerivAbs = 1e-9;

struct Deriv {
  double value = 0.0;        // extrapolation from the two finest steps
  double consistency = 0.0;  // spread between the two extrapolated estimates
};

// Central difference of f at 0 with steps scale*{1e-3, 5e-4, 2.5e-4} and one
// Richardson level.  `consistency` is |R(fine) - R(coarse)| and serves as an
// internal convergence diagnostic.
inline Deriv central_derivative(const std::function<double(double)>& f,
                                double scale = 1.0) {
  const double h0 = kStep0 * scale;
  auto d = [&](double h) { return (f(h) - f(-h)) / (2.0 * h); };
  const double d0 = d(h0);
  const double d1 = d(h0 / 2.0);
  const double d2 = d(h0 / 4.0);
  const double r01 = (4.0 * d1 - d0) / 3.0;
  const double r12 = (4.0 * d2 - d1) / 3.0;
  return Deriv{r12, std::abs(r12 - r01)};
}

// Neumaier compensated accumulator: keeps long reductions accurate to a few
// ulp of the running sum regardless of the number of terms.
class Acc {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double tol_for(double expected, double rel = kDerivRel,
                      double abs_floor = kDerivAbs) {
  return std::max(abs_floor, rel * std::abs(expected));
}

// |measured - expected| <= max(abs_floor, rel*|expected|)
inline bool within(double measured, double expected, double rel = kDerivRel,
                   double abs_floor = kDerivAbs) {
  return std::abs(measured - expected) <= tol_for(expected, rel, abs_floor);
}

// Least-squares slope of log(v) against log(t).  Points with v <= 0 are
// dropped; with fewer than two usable points the curve is flat at zero (to
// machine precision) and the slope is reported as +infinity.
inline double loglog_slope(const std::vector<double>& t,
                           const std::vector<double>& v) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size() && i < v.size(); ++i) {
    if (v[i] > 0.0 && t[i] > 0.0) {
      xs.push_back(std::log(t[i]));
      ys.push_back(std::log(v[i]));
    }
  }
  if (xs.size() < 2) return std::numeric_limits<double>::infinity();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

}  // namespace ortho::num

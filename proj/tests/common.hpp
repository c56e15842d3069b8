#pragma once

// Shared fixtures for the unit test suites: small hand-checked models whose
// moments are exact in binary floating point, plus a scratch-file helper for
// the parsing tests.

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ortho/ate_model.hpp"
#include "ortho/model_core.hpp"

namespace testutil {

// Two-atom space {z0, z1} with counting measure.
inline ortho::SpacePtr two_atom_space() {
  return ortho::SampleSpace::make({"z0", "z1"});
}

// Base distribution (0.7, 0.3): beta(P) = sum p^2 evaluates to 0.58 with
// gradient 2(p - 0.58) = (0.24, -0.56).
inline ortho::Distribution two_point() {
  return ortho::Distribution(two_atom_space(), {0.7, 0.3});
}

inline ortho::Distribution uniform2() {
  return ortho::Distribution(two_atom_space(), {0.5, 0.5});
}

// Mean-zero direction under two_point(): 0.7*0.15 - 0.3*0.35 = 0.
inline ortho::ScoreFunction tilt_score_two_point() {
  const ortho::Distribution base = two_point();
  return ortho::ScoreFunction(
      ortho::RealFunction(base.space(), {0.15, -0.35}), base);
}

// Binary-outcome treatment model with two covariate levels.  Exact truth:
// mu1 = (0.6, 0.9), mu0 = (0.2, 0.3), tau = (0.4, 0.6), beta0 = 0.5,
// Var(tau) = 0.01, sigma2_a1 = (0.24, 0.09), sigma2_a0 = (0.16, 0.21).
inline ortho::ate::ATESpecData reference_spec() {
  ortho::ate::ATESpecData s;
  s.x_probs = {0.5, 0.5};
  s.pi = {0.5, 0.5};
  s.y_support = {0.0, 1.0};
  s.y_cond_a1 = {{0.4, 0.6}, {0.1, 0.9}};
  s.y_cond_a0 = {{0.8, 0.2}, {0.7, 0.3}};
  s.epsilon = 0.25;
  s.c_y = 1.0;
  s.sigma2_min = 0.05;
  return s;
}

// Same outcome model with asymmetric propensities (0.25, 0.7).  The balanced
// propensities of reference_spec() make the second-order bias coefficient of
// the default sweep direction cancel, so slope measurements use this variant.
inline ortho::ate::ATESpecData sweep_spec() {
  ortho::ate::ATESpecData s = reference_spec();
  s.pi = {0.25, 0.7};
  s.epsilon = 0.2;
  return s;
}

// Writes contents to a unique scratch file in the working directory and
// removes it on destruction.
class TempFile {
 public:
  explicit TempFile(const std::string& contents) {
    static int counter = 0;
    path_ = "scratch_" + std::to_string(getpid()) + "_" +
            std::to_string(++counter) + ".txt";
    std::ofstream f(path_, std::ios::binary);
    f << contents;
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;
  ~TempFile() { std::remove(path_.c_str()); }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace testutil

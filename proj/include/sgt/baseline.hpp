#pragma once

// Constant Gaussian noise baseline with local differential-privacy
// accounting. The reported epsilon is the classical Gaussian-mechanism
// calibration inverted for sigma:
//
//   epsilon = delta_2 * sqrt(2 ln(1.25 / dp_delta)) / sigma
//
// which is valid for epsilon <= 1; larger values are still reported but
// flagged in the sweep output rather than silently dropped.

#include <string>
#include <vector>

#include "sgt/ad.hpp"
#include "sgt/rng.hpp"

namespace sgt {

struct ConstantNoiseMechanism {
  float sigma = 0.0f;       // per-coordinate stddev; 0 = passthrough
  double sensitivity = 0.0; // replace-one-token L2 sensitivity
  double dp_delta = 1e-5;
};

// x + sigma * u with u standard normal per coordinate.
MatF apply_constant_noise(const MatF& x, float sigma, RngStream& stream);

// Maximum pairwise L2 distance between table rows: the replacement
// neighborhood bound for a single position.
double l2_sensitivity(const MatF& table);

double epsilon_of(double sigma, double sensitivity, double dp_delta);

struct SweepRow {
  double sigma = 0.0;
  double epsilon = 0.0;  // +inf when sigma == 0
  double utility_agreement = 0.0;
  double utility_ce_gap = 0.0;
  double nn_fr = 0.0;
  std::string note;  // accountant validity caveat when epsilon > 1
};

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace sgt

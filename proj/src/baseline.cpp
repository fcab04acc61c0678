#include "sgt/baseline.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sgt {

MatF apply_constant_noise(const MatF& x, float sigma, RngStream& stream) {
  if (sigma < 0) throw std::invalid_argument("constant noise: sigma < 0");
  if (sigma == 0.0f) return x;
  return x + sigma * gaussian_draw<float>(stream, x.rows(), x.cols());
}

double l2_sensitivity(const MatF& table) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < table.rows(); ++i)
    for (Eigen::Index j = i + 1; j < table.rows(); ++j)
      best = std::max(
          best, static_cast<double>((table.row(i) - table.row(j)).norm()));
  if (best <= 0) throw std::invalid_argument("l2_sensitivity: degenerate table");
  return best;
}

double epsilon_of(double sigma, double sensitivity, double dp_delta) {
  if (sigma < 0 || sensitivity <= 0)
    throw std::invalid_argument("epsilon_of: need sigma >= 0, sensitivity > 0");
  if (dp_delta <= 0 || dp_delta >= 1)
    throw std::invalid_argument("epsilon_of: dp_delta must be in (0, 1)");
  if (sigma == 0.0) return std::numeric_limits<double>::infinity();
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / dp_delta)) / sigma;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "sigma,epsilon,utility_agreement,utility_ce_gap,nn_fr,note\n";
  for (const auto& r : rows) {
    out << r.sigma << ',' << r.epsilon << ',' << r.utility_agreement << ','
        << r.utility_ce_gap << ',' << r.nn_fr << ',' << r.note << "\n";
  }
  return out.str();
}

}  // namespace sgt

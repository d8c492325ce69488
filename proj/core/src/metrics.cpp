#include "lsmrn/metrics.hpp"

#include <cmath>
#include <string>

#include "lsmrn/errors.hpp"

namespace lsmrn {
namespace {

void check_lengths(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) {
    throw ConfigError("metric inputs differ in length: " + std::to_string(truth.size()) + " vs " +
                      std::to_string(predicted.size()));
  }
  if (truth.empty()) throw ConfigError("metric inputs are empty");
}

}  // namespace

double mape(std::span<const double> truth, std::span<const double> predicted) {
  check_lengths(truth, predicted);
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!(truth[i] > 0.0)) throw ConfigError("MAPE needs positive truth values, got " + std::to_string(truth[i]));
    sum += std::abs(truth[i] - predicted[i]) / truth[i];
  }
  return sum / static_cast<double>(truth.size());
}

double rmse(std::span<const double> truth, std::span<const double> predicted) {
  check_lengths(truth, predicted);
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double r = truth[i] - predicted[i];
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(truth.size()));
}

}  // namespace lsmrn

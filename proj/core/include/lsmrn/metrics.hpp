#pragma once

#include <span>

namespace lsmrn {

/// Mean absolute percentage error, (1/N) sum |y - y_hat| / y. Every truth
/// value must be positive.
double mape(std::span<const double> truth, std::span<const double> predicted);

/// Root mean square error.
double rmse(std::span<const double> truth, std::span<const double> predicted);

}  // namespace lsmrn

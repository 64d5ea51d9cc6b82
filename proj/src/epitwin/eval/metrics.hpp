#pragma once

#include "epitwin/ad/tensor.hpp"

#include <span>

namespace epitwin::eval {

/// sqrt(mean of squared residuals) over equal-shaped series.
double rmse(std::span<const double> yhat, std::span<const double> y);
double rmse(const ad::Tensor& yhat, const ad::Tensor& y);

} // namespace epitwin::eval

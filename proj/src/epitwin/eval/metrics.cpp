#include "epitwin/eval/metrics.hpp"

#include "epitwin/util/error.hpp"

#include <cmath>

namespace epitwin::eval {

double rmse(std::span<const double> yhat, std::span<const double> y)
{
    require(yhat.size() == y.size(), Errc::contract_error,
            "rmse over series of different lengths");
    require(!y.empty(), Errc::contract_error, "rmse over empty series");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double r = yhat[i] - y[i];
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(y.size()));
}

double rmse(const ad::Tensor& yhat, const ad::Tensor& y)
{
    require(yhat.shape() == y.shape(), Errc::contract_error,
            "rmse shapes differ: " + ad::shape_str(yhat.shape()) + " vs " +
                ad::shape_str(y.shape()));
    return rmse(yhat.values(), y.values());
}

} // namespace epitwin::eval

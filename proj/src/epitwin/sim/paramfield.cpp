#include "epitwin/sim/paramfield.hpp"

#include "epitwin/util/error.hpp"

#include <algorithm>

namespace epitwin::sim {

ParamField ParamField::constant(std::size_t patches, std::size_t steps,
                                const std::array<double, 8>& channel_values)
{
    std::vector<double> vals;
    vals.reserve(patches * steps * 8);
    for (std::size_t l = 0; l < patches; ++l)
        for (std::size_t t = 0; t < steps; ++t)
            vals.insert(vals.end(), channel_values.begin(), channel_values.end());
    ParamField pf;
    pf.values = ad::Tensor::from({patches, steps, 8}, std::move(vals));
    return pf;
}

ParamField ParamField::from_tensor(ad::Tensor values, std::array<dsl::Bounds, 8> bounds)
{
    require(values.rank() == 3 && values.shape()[2] == 8, Errc::shape_error,
            "ParamField expects shape (L, T, 8), got " + ad::shape_str(values.shape()));
    ParamField pf;
    pf.values = std::move(values);
    pf.bounds = bounds;
    return pf;
}

bool ParamField::within_bounds(double tol) const
{
    auto v = values.values();
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& b = bounds[i % 8];
        if (v[i] < b.lo - tol || v[i] > b.hi + tol)
            return false;
    }
    return true;
}

ParamField apply_intervention(const ParamField& params, std::size_t t_start, double delta,
                              const std::vector<int>& channels,
                              const std::vector<std::size_t>& patches)
{
    require(delta >= 0.0 && delta <= 1.0, Errc::contract_error,
            "intervention strength must lie in [0, 1]");
    const std::size_t L = params.patches();
    const std::size_t T = params.steps();
    require(t_start <= T, Errc::contract_error, "intervention start beyond the horizon");

    std::vector<double> vals(params.values.values().begin(), params.values.values().end());
    const double factor = 1.0 - delta;
    auto touch_patch = [&](std::size_t l) {
        for (std::size_t t = t_start; t < T; ++t)
            for (int c : channels) {
                require(c >= 0 && c < 8, Errc::contract_error, "channel index out of range");
                vals[(l * T + t) * 8 + static_cast<std::size_t>(c)] *= factor;
            }
    };
    if (patches.empty()) {
        for (std::size_t l = 0; l < L; ++l)
            touch_patch(l);
    } else {
        for (std::size_t l : patches) {
            require(l < L, Errc::contract_error, "patch index out of range");
            touch_patch(l);
        }
    }
    ParamField out;
    out.values = ad::Tensor::from({L, T, 8}, std::move(vals));
    out.bounds = params.bounds;
    return out;
}

} // namespace epitwin::sim

#pragma once

#include "epitwin/ad/tensor.hpp"
#include "epitwin/dsl/verify.hpp"

#include <array>
#include <vector>

namespace epitwin::sim {

/// Shared numeric guard: denominators inside the interpreter are
/// floored at this value, matching the verifier's E2 requirement.
inline constexpr double guard_epsilon = 1e-8;

/// Mechanistic parameters per (patch, step, channel). The channel axis
/// follows dsl::channel_names order. Tracked when a calibration net
/// produced it; plain for fixed scenarios.
struct ParamField {
    ad::Tensor values; // (L, T, 8)
    std::array<dsl::Bounds, 8> bounds{};

    std::size_t patches() const { return values.shape()[0]; }
    std::size_t steps() const { return values.shape()[1]; }

    static ParamField constant(std::size_t patches, std::size_t steps,
                               const std::array<double, 8>& channel_values);
    static ParamField from_tensor(ad::Tensor values, std::array<dsl::Bounds, 8> bounds = {});

    bool within_bounds(double tol = 0.0) const;
};

/// Counterfactual transform: scale the listed channels by (1 - delta)
/// for t >= t_start on the listed patches (empty = all). Every other
/// entry is bit-identical to the input. Output is untracked.
ParamField apply_intervention(const ParamField& params, std::size_t t_start, double delta,
                              const std::vector<int>& channels = {0},
                              const std::vector<std::size_t>& patches = {});

} // namespace epitwin::sim

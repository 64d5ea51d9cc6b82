#pragma once

#include "epitwin/ad/adamw.hpp"
#include "epitwin/calib/calibnet.hpp"
#include "epitwin/dsl/ast.hpp"
#include "epitwin/eval/dataset.hpp"
#include "epitwin/sim/simulator.hpp"

#include <cstdint>
#include <vector>

namespace epitwin::calib {

struct TrainConfig {
    double lr = 5e-4;
    long iterations = 1000;
    double weight_decay = 0.01;
    std::uint64_t seed = 0;
};

struct TrainResult {
    std::vector<double> loss_curve; // RMSE per iteration, before the update
};

/// Fit the net in place by iterating predict -> simulate -> RMSE ->
/// backward -> AdamW over the data window. Deterministic under a fixed
/// seed. SIM_DIVERGENCE and OPTIMIZER_DIVERGENCE abort with the
/// iteration index in the message.
TrainResult train(const sim::CompiledModel& model, const sim::MetapopContext& ctx, CalibNet& net,
                  const eval::Dataset& data, std::size_t target_feature, const TrainConfig& cfg);
TrainResult train(const dsl::ModelSpec& spec, const sim::MetapopContext& ctx, CalibNet& net,
                  const eval::Dataset& data, std::size_t target_feature, const TrainConfig& cfg);

/// Forecast the observed series over [T+1, T+H]: parameters for T+H
/// steps (held beyond the window), one simulation, last H rows.
/// Returns a (H, L) tensor.
ad::Tensor forecast(const sim::CompiledModel& model, const sim::MetapopContext& ctx,
                    const CalibNet& net, const eval::Dataset& data, std::size_t horizon);
ad::Tensor forecast(const dsl::ModelSpec& spec, const sim::MetapopContext& ctx,
                    const CalibNet& net, const eval::Dataset& data, std::size_t horizon);

} // namespace epitwin::calib

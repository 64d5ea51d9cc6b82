#pragma once

#include "epitwin/calib/train.hpp"
#include "epitwin/eval/dataset.hpp"

#include <json.hpp>

#include <vector>

namespace epitwin::eval {

/// Default forecast horizon per cadence: 8 weeks or 28 days.
std::size_t default_horizon(Cadence c);

struct EvalConfig {
    std::size_t train_window = 104;            // T_train
    std::size_t horizon = 8;                   // H
    std::vector<std::size_t> shifts = {0, 1, 2, 3};
    calib::TrainConfig train;
    std::size_t hidden = 32;
    calib::CellKind cell = calib::CellKind::gru;
    std::array<dsl::Bounds, 8> bounds{};
    bool oracle = false; // inject yhat := y; exercises the protocol itself
    bool parallel_shifts = true;
};

struct ShiftResult {
    std::size_t shift = 0;
    double rmse = 0.0;
    ad::Tensor forecast;            // (H, L)
    std::vector<double> loss_curve; // training curve for this shift
};

struct EvalReport {
    std::vector<ShiftResult> per_shift; // declared shift order
    double mean_rmse = 0.0;
    nlohmann::ordered_json to_json() const;
};

/// Rolling-origin protocol: for each shift s train a fresh seeded net
/// on [s, s + T_train), forecast H steps, and score against the held
/// out range. Nothing from any test range enters training or
/// normalization. Shifts run in parallel; the report aggregates in
/// declared order either way, bit-identically.
EvalReport realtime_eval(const dsl::ModelSpec& spec, const Dataset& data, const EvalConfig& cfg);

} // namespace epitwin::eval

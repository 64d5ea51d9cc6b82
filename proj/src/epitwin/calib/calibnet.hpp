#pragma once

#include "epitwin/ad/tensor.hpp"
#include "epitwin/dsl/verify.hpp"
#include "epitwin/eval/dataset.hpp"
#include "epitwin/sim/paramfield.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace epitwin::calib {

enum class CellKind { gru, mgu };

const char* cell_name(CellKind c);
CellKind cell_from(const std::string& s);

struct NetConfig {
    std::size_t input_dim = 0;
    std::size_t hidden = 32;
    CellKind cell = CellKind::gru;
    std::array<dsl::Bounds, 8> bounds{};
    std::uint64_t seed = 0;
};

/// Sequence-to-parameter network: per-feature standardization, a tanh
/// embedding, one gated recurrent cell shared across locations, and a
/// per-step linear head squashed into the channel bounds by a scaled
/// sigmoid. Locations are processed as independent batch rows.
class CalibNet {
public:
    explicit CalibNet(NetConfig cfg);

    const NetConfig& config() const { return cfg_; }
    std::vector<ad::Tensor>& weights() { return weights_; }
    const std::vector<ad::Tensor>& weights() const { return weights_; }
    const std::vector<std::string>& weight_names() const { return names_; }

    /// Per-feature z-score statistics, fitted on the training window
    /// only so later windows cannot leak into normalization.
    void fit_normalizer(const eval::Dataset& data);
    const std::vector<double>& feature_mean() const { return mean_; }
    const std::vector<double>& feature_std() const { return std_; }

    /// Forward pass over the data window, extended to `steps` by
    /// holding the final head output (the forecast regime).
    /// With a tape, weights are tracked leaves and the result
    /// participates in backward; `tracked_out` then receives the leaf
    /// tensors aligned with weights().
    sim::ParamField forward(const eval::Dataset& data, std::size_t steps, ad::Tape* tape,
                            std::vector<ad::Tensor>* tracked_out = nullptr) const;

    void save(const std::filesystem::path& path) const;
    static CalibNet load(const std::filesystem::path& path);

private:
    NetConfig cfg_;
    std::vector<std::string> names_;
    std::vector<ad::Tensor> weights_;
    std::vector<double> mean_, std_;
};

/// Spec operation: bounded parameters for `steps` steps from the data
/// window. Tracked when a tape is supplied.
sim::ParamField predict_params(const CalibNet& net, const eval::Dataset& data, std::size_t steps,
                               ad::Tape* tape = nullptr);

} // namespace epitwin::calib

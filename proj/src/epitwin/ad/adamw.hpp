#pragma once

#include "epitwin/ad/tensor.hpp"

#include <string>
#include <vector>

namespace epitwin::ad {

struct AdamWConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

/// First/second moment estimates, one pair per weight tensor.
struct AdamWState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    static AdamWState like(const std::vector<Tensor>& weights);
};

struct AdamWOutcome {
    bool applied = true;
    std::string note; // OPTIMIZER_DIVERGENCE detail when skipped
};

/// Decoupled-weight-decay Adam with bias correction, step index t >= 1.
/// A non-finite gradient anywhere skips the whole step (weights and
/// moments untouched) and reports it in the outcome.
AdamWOutcome adamw_step(std::vector<Tensor>& weights,
                        const std::vector<Tensor>& grads,
                        AdamWState& state,
                        const AdamWConfig& cfg,
                        long t);

} // namespace epitwin::ad

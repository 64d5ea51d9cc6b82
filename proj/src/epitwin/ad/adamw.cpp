#include "epitwin/ad/adamw.hpp"

#include "epitwin/util/error.hpp"

#include <cmath>

namespace epitwin::ad {

AdamWState AdamWState::like(const std::vector<Tensor>& weights)
{
    AdamWState s;
    s.m.reserve(weights.size());
    s.v.reserve(weights.size());
    for (const auto& w : weights) {
        s.m.push_back(Tensor::zeros(w.shape()));
        s.v.push_back(Tensor::zeros(w.shape()));
    }
    return s;
}

AdamWOutcome adamw_step(std::vector<Tensor>& weights,
                        const std::vector<Tensor>& grads,
                        AdamWState& state,
                        const AdamWConfig& cfg,
                        long t)
{
    require(t >= 1, Errc::contract_error, "adamw_step requires t >= 1");
    require(weights.size() == grads.size() && weights.size() == state.m.size() &&
                weights.size() == state.v.size(),
            Errc::contract_error, "adamw_step weight/grad/moment count mismatch");
    for (std::size_t i = 0; i < weights.size(); ++i)
        require(weights[i].shape() == grads[i].shape() &&
                    weights[i].shape() == state.m[i].shape(),
                Errc::shape_error, "adamw_step shape mismatch at weight " + std::to_string(i));

    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!grads[i].all_finite())
            return {false, std::string(errc_name(Errc::optimizer_divergence)) +
                               ": non-finite gradient in weight tensor " + std::to_string(i) +
                               ", step skipped"};
    }

    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < weights.size(); ++i) {
        auto w = weights[i].values_mut();
        auto g = grads[i].values();
        auto m = state.m[i].values_mut();
        auto v = state.v[i].values_mut();
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * w[j]);
        }
    }
    return {true, {}};
}

} // namespace epitwin::ad

#include "epitwin/calib/train.hpp"

#include "epitwin/ad/ops.hpp"
#include "epitwin/util/error.hpp"

namespace epitwin::calib {

using ad::Tensor;

TrainResult train(const sim::CompiledModel& model, const sim::MetapopContext& ctx, CalibNet& net,
                  const eval::Dataset& data, std::size_t target_feature, const TrainConfig& cfg)
{
    require(cfg.iterations >= 1, Errc::contract_error, "training needs at least one iteration");
    require(data.T >= 2, Errc::contract_error, "training needs a window of length >= 2");
    require(target_feature < data.d, Errc::contract_error, "target feature out of range");

    // Target series as (T, L), matching the simulated observation.
    std::vector<double> yvals(data.T * data.L);
    for (std::size_t t = 0; t < data.T; ++t)
        for (std::size_t l = 0; l < data.L; ++l)
            yvals[t * data.L + l] = data.at(l, t, target_feature);
    Tensor y = Tensor::from({data.T, data.L}, std::move(yvals));

    ad::AdamWConfig opt;
    opt.lr = cfg.lr;
    opt.weight_decay = cfg.weight_decay;
    ad::AdamWState state = ad::AdamWState::like(net.weights());

    TrainResult result;
    result.loss_curve.reserve(static_cast<std::size_t>(cfg.iterations));

    for (long iter = 0; iter < cfg.iterations; ++iter) {
        ad::Tape tape;
        std::vector<Tensor> tracked;
        sim::ParamField params;
        Tensor loss;
        try {
            params = net.forward(data, data.T, &tape, &tracked);
            auto traj = sim::simulate(model, ctx, params, data.T);
            loss = ad::sqrt(ad::mean(ad::square(ad::sub(traj.yhat, y))));
        } catch (const Error& e) {
            if (e.code() == Errc::sim_divergence)
                raise(Errc::sim_divergence,
                      "iteration " + std::to_string(iter) + ": " + e.what());
            throw;
        }
        result.loss_curve.push_back(loss.item());

        ad::Gradients grads = tape.backward(loss);
        std::vector<Tensor> grad_list;
        grad_list.reserve(tracked.size());
        for (const auto& leaf : tracked)
            grad_list.push_back(grads.at(leaf).detach());
        auto outcome = ad::adamw_step(net.weights(), grad_list, state, opt, iter + 1);
        if (!outcome.applied)
            raise(Errc::optimizer_divergence,
                  "iteration " + std::to_string(iter) + ": " + outcome.note);
    }
    return result;
}

TrainResult train(const dsl::ModelSpec& spec, const sim::MetapopContext& ctx, CalibNet& net,
                  const eval::Dataset& data, std::size_t target_feature, const TrainConfig& cfg)
{
    return train(sim::compile(spec), ctx, net, data, target_feature, cfg);
}

ad::Tensor forecast(const sim::CompiledModel& model, const sim::MetapopContext& ctx,
                    const CalibNet& net, const eval::Dataset& data, std::size_t horizon)
{
    const std::size_t total = data.T + horizon;
    const std::size_t L = data.L;
    if (horizon == 0)
        return Tensor::zeros({0, L});
    sim::ParamField params = net.forward(data, total, nullptr);
    auto traj = sim::simulate(model, ctx, params, total);
    return ad::slice(traj.yhat, 0, data.T, horizon).detach();
}

ad::Tensor forecast(const dsl::ModelSpec& spec, const sim::MetapopContext& ctx,
                    const CalibNet& net, const eval::Dataset& data, std::size_t horizon)
{
    return forecast(sim::compile(spec), ctx, net, data, horizon);
}

} // namespace epitwin::calib

#include "epitwin/eval/realtime.hpp"

#include "epitwin/eval/metrics.hpp"
#include "epitwin/util/error.hpp"
#include "epitwin/util/rng.hpp"

#include <exception>

namespace epitwin::eval {

std::size_t default_horizon(Cadence c)
{
    return c == Cadence::week ? 8 : 28;
}

nlohmann::ordered_json EvalReport::to_json() const
{
    nlohmann::ordered_json shifts = nlohmann::ordered_json::array();
    for (const auto& s : per_shift)
        shifts.push_back({{"shift", s.shift}, {"rmse", s.rmse}});
    return {{"per_shift", shifts}, {"mean_rmse", mean_rmse}};
}

EvalReport realtime_eval(const dsl::ModelSpec& spec, const Dataset& data, const EvalConfig& cfg)
{
    require(!cfg.shifts.empty(), Errc::contract_error, "realtime_eval needs at least one shift");
    require(cfg.horizon >= 1, Errc::contract_error, "realtime_eval needs a positive horizon");
    for (std::size_t s : cfg.shifts)
        require(s + cfg.train_window + cfg.horizon <= data.T, Errc::contract_error,
                "shift " + std::to_string(s) + " exceeds the dataset (T=" + std::to_string(data.T) +
                    ")");

    const sim::CompiledModel model = sim::compile(spec);
    const sim::MetapopContext ctx = data.context();

    EvalReport report;
    report.per_shift.resize(cfg.shifts.size());
    std::vector<std::exception_ptr> failures(cfg.shifts.size());

    auto run_shift = [&](std::size_t si) {
        const std::size_t shift = cfg.shifts[si];
        ShiftResult& out = report.per_shift[si];
        out.shift = shift;

        // Truth over the test range, as (H, L).
        ad::Tensor truth = data.target_matrix(shift + cfg.train_window, cfg.horizon);

        if (cfg.oracle) {
            out.forecast = truth;
            out.rmse = rmse(out.forecast, truth);
            return;
        }

        Dataset window = data.window(shift, cfg.train_window);

        calib::NetConfig ncfg;
        ncfg.input_dim = data.d;
        ncfg.hidden = cfg.hidden;
        ncfg.cell = cfg.cell;
        ncfg.bounds = cfg.bounds;
        // Fresh net per shift, seeded from the run seed and the shift.
        ncfg.seed = Rng(cfg.train.seed).stream(0x5E1F7 + shift).next_u64();
        calib::CalibNet net(ncfg);
        net.fit_normalizer(window);

        auto trained = calib::train(model, ctx, net, window, data.target_feature, cfg.train);
        out.loss_curve = std::move(trained.loss_curve);
        out.forecast = calib::forecast(model, ctx, net, window, cfg.horizon);
        out.rmse = rmse(out.forecast, truth);
    };

    if (cfg.parallel_shifts && cfg.shifts.size() > 1) {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(cfg.shifts.size()); ++si) {
            try {
                run_shift(static_cast<std::size_t>(si));
            } catch (...) {
                failures[static_cast<std::size_t>(si)] = std::current_exception();
            }
        }
    } else {
        for (std::size_t si = 0; si < cfg.shifts.size(); ++si) {
            try {
                run_shift(si);
            } catch (...) {
                failures[si] = std::current_exception();
            }
        }
    }

    // First failure in declared shift order wins, deterministically.
    for (std::size_t si = 0; si < failures.size(); ++si)
        if (failures[si])
            std::rethrow_exception(failures[si]);

    double acc = 0.0;
    for (const auto& s : report.per_shift)
        acc += s.rmse;
    report.mean_rmse = acc / static_cast<double>(report.per_shift.size());
    return report;
}

} // namespace epitwin::eval

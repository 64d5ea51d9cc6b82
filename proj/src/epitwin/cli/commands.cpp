#include "epitwin/cli/commands.hpp"

#include "epitwin/agent/insights.hpp"
#include "epitwin/agent/loop.hpp"
#include "epitwin/dsl/parser.hpp"
#include "epitwin/dsl/printer.hpp"
#include "epitwin/eval/metrics.hpp"
#include "epitwin/util/error.hpp"
#include "epitwin/util/fs.hpp"
#include "epitwin/util/log.hpp"
#include "epitwin/util/rng.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <sstream>

namespace epitwin::cli {

namespace fs = std::filesystem;

namespace {

struct Inputs {
    eval::Dataset data;
    std::optional<eval::SynthResult> synth; // present when a scenario generated the data
};

Inputs load_inputs(const RunConfig& cfg)
{
    Inputs in;
    if (cfg.dataset_path) {
        in.data = eval::ingest(cfg.base_dir / *cfg.dataset_path);
    } else if (cfg.scenario) {
        in.synth = eval::synthesize(*cfg.scenario, cfg.seed);
        in.data = in.synth->data;
    } else {
        raise(Errc::config_error, "config needs either 'dataset' or 'scenario'");
    }
    return in;
}

dsl::ModelSpec load_spec(const RunConfig& cfg)
{
    require(cfg.spec_path.has_value(), Errc::config_error, "config needs 'spec'");
    return dsl::parse(read_file(cfg.base_dir / *cfg.spec_path));
}

eval::EvalConfig eval_config(const RunConfig& cfg, const eval::Dataset& data)
{
    eval::EvalConfig ecfg;
    ecfg.train_window = cfg.eval.t_train;
    ecfg.horizon = cfg.eval.horizon ? *cfg.eval.horizon : eval::default_horizon(data.cadence);
    ecfg.shifts = cfg.eval.shifts;
    ecfg.oracle = cfg.eval.oracle;
    ecfg.parallel_shifts = cfg.eval.parallel_shifts;
    ecfg.hidden = cfg.train.hidden;
    ecfg.cell = cfg.train.cell;
    ecfg.bounds = cfg.bounds;
    ecfg.train.lr = cfg.train.lr;
    ecfg.train.iterations =
        cfg.eval.train_iterations ? *cfg.eval.train_iterations : cfg.train.iterations;
    ecfg.train.weight_decay = cfg.train.weight_decay;
    ecfg.train.seed = cfg.seed;
    return ecfg;
}

calib::CalibNet make_net(const RunConfig& cfg, const eval::Dataset& data, std::uint64_t stream)
{
    calib::NetConfig ncfg;
    ncfg.input_dim = data.d;
    ncfg.hidden = cfg.train.hidden;
    ncfg.cell = cfg.train.cell;
    ncfg.bounds = cfg.bounds;
    ncfg.seed = Rng(cfg.seed).stream(stream).next_u64();
    return calib::CalibNet(ncfg);
}

std::string params_csv(const sim::ParamField& params)
{
    std::ostringstream out;
    out << "patch,t,channel,value\n";
    const std::size_t L = params.patches(), T = params.steps();
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t c = 0; c < 8; ++c)
                out << l << ',' << t << ',' << dsl::channel_names[c] << ','
                    << dsl::format_number(params.values.at((l * T + t) * 8 + c)) << '\n';
    return out.str();
}

std::string loss_csv(const std::vector<double>& curve)
{
    std::ostringstream out;
    out << "iteration,rmse\n";
    for (std::size_t i = 0; i < curve.size(); ++i)
        out << i << ',' << dsl::format_number(curve[i]) << '\n';
    return out.str();
}

/// Parameter field for simulate/intervene: a checkpoint prediction, a
/// constant map, or the scenario's hidden truth.
sim::ParamField resolve_params(const RunConfig& cfg, const Inputs& in, std::size_t steps)
{
    if (cfg.simulate.checkpoint) {
        calib::CalibNet net = calib::CalibNet::load(cfg.base_dir / *cfg.simulate.checkpoint);
        return calib::predict_params(net, in.data, steps);
    }
    if (cfg.simulate.params) {
        auto pf = sim::ParamField::constant(in.data.L, steps, *cfg.simulate.params);
        pf.bounds = cfg.bounds;
        return pf;
    }
    if (in.synth) {
        require(steps <= in.synth->truth_params.steps(), Errc::config_error,
                "simulate.steps exceeds the scenario horizon");
        return in.synth->truth_params;
    }
    raise(Errc::config_error,
          "simulate needs 'simulate.checkpoint', 'simulate.params', or a scenario with "
          "hidden truth");
}

} // namespace

void cmd_synth(const RunConfig& cfg, const fs::path& out_dir)
{
    require(cfg.scenario.has_value(), Errc::config_error, "synth needs a 'scenario' block");
    auto synth = eval::synthesize(*cfg.scenario, cfg.seed);
    eval::write_dataset(synth.data, out_dir / "dataset");
    atomic_write_file(out_dir / "truth_spec.nimm", dsl::pretty(synth.truth_spec));
    atomic_write_file(out_dir / "truth_params.csv", params_csv(synth.truth_params));
    log::info("synth: wrote dataset (" + std::to_string(synth.data.L) + " x " +
              std::to_string(synth.data.T) + " x " + std::to_string(synth.data.d) + ") to " +
              (out_dir / "dataset").string());
}

void cmd_simulate(const RunConfig& cfg, const fs::path& out_dir)
{
    Inputs in = load_inputs(cfg);
    dsl::ModelSpec spec = load_spec(cfg);
    const std::size_t steps = cfg.simulate.steps ? *cfg.simulate.steps : in.data.T;
    sim::ParamField params = resolve_params(cfg, in, steps);
    auto traj = sim::simulate(spec, in.data.context(), params, steps);
    atomic_write_file(out_dir / "trajectory.csv", sim::trajectory_csv(traj));
    log::info("simulate: wrote " + (out_dir / "trajectory.csv").string());
}

void cmd_calibrate(const RunConfig& cfg, const fs::path& out_dir)
{
    Inputs in = load_inputs(cfg);
    dsl::ModelSpec spec = load_spec(cfg);
    const std::size_t window_len = cfg.train.window ? *cfg.train.window : in.data.T;
    eval::Dataset window = in.data.window(0, window_len);

    calib::CalibNet net = make_net(cfg, in.data, 0xCA11);
    net.fit_normalizer(window);
    calib::TrainConfig tcfg;
    tcfg.lr = cfg.train.lr;
    tcfg.iterations = cfg.train.iterations;
    tcfg.weight_decay = cfg.train.weight_decay;
    tcfg.seed = cfg.seed;
    auto model = sim::compile(spec);
    auto ctx = in.data.context();
    auto result = calib::train(model, ctx, net, window, in.data.target_feature, tcfg);

    net.save(out_dir / "checkpoint.bin");
    atomic_write_file(out_dir / "loss_curve.csv", loss_csv(result.loss_curve));
    auto params = calib::predict_params(net, window, window_len);
    auto traj = sim::simulate(model, ctx, params, window_len);
    atomic_write_file(out_dir / "fitted.csv", sim::trajectory_csv(traj));
    log::info("calibrate: final loss " + dsl::format_number(result.loss_curve.back()) +
              ", artifacts in " + out_dir.string());
}

void cmd_evaluate(const RunConfig& cfg, const fs::path& out_dir)
{
    Inputs in = load_inputs(cfg);
    dsl::ModelSpec spec = load_spec(cfg);
    auto report = eval::realtime_eval(spec, in.data, eval_config(cfg, in.data));
    atomic_write_file(out_dir / "report.json", report.to_json().dump(2) + "\n");
    log::info("evaluate: mean RMSE " + dsl::format_number(report.mean_rmse) + ", report in " +
              (out_dir / "report.json").string());
}

void cmd_evolve(const RunConfig& cfg, const fs::path& out_dir)
{
    Inputs in = load_inputs(cfg);

    agent::EvolveConfig acfg;
    acfg.generations = cfg.evolve.generations;
    acfg.k = cfg.evolve.k;
    acfg.seed = cfg.seed;
    acfg.hybrid = cfg.evolve.hybrid;
    acfg.verify.hybrid = cfg.evolve.hybrid;
    acfg.verify.config.bounds = cfg.bounds;
    for (const auto& w : cfg.evolve.reject_warnings)
        acfg.verify.rejecting_warnings.insert(w);
    acfg.eval = eval_config(cfg, in.data);

    std::unique_ptr<agent::CandidateGenerator> generator;
    std::optional<agent::LlmClient> llm;
    if (cfg.evolve.generator == "llm") {
        agent::LlmConfig lcfg = cfg.evolve.endpoint;
        agent::LlmConfig env_cfg = agent::LlmConfig::from_env();
        if (lcfg.base_url.empty())
            lcfg.base_url = env_cfg.base_url;
        if (lcfg.model.empty())
            lcfg.model = env_cfg.model;
        if (lcfg.api_key.empty())
            lcfg.api_key = env_cfg.api_key;
        generator = std::make_unique<agent::LlmGenerator>(lcfg, cfg.evolve.hybrid);
        llm.emplace(lcfg);
    } else {
        generator = std::make_unique<agent::MutationGenerator>(cfg.seed, cfg.evolve.hybrid);
    }

    agent::SnippetStore store;
    if (cfg.evolve.snippets_dir)
        store = agent::SnippetStore::from_dir(cfg.base_dir / *cfg.evolve.snippets_dir);

    agent::EvolveEnv env{in.data, *generator, &store,
                         llm ? &*llm : nullptr,
                         (llm && cfg.evolve.judge) ? &*llm : nullptr};
    auto result = agent::evolve(env, acfg);

    atomic_write_file(out_dir / "report.json", result.report().dump(2) + "\n");
    if (result.best_generation >= 0)
        atomic_write_file(out_dir / "best.nimm", result.best_text);
    log::info("evolve: best v " +
              (result.best_generation >= 0 ? dsl::format_number(result.best_v) : "n/a") +
              ", bug_counts@20 " + std::to_string(eval::bug_counts_at(result.log, 20)));
}

void cmd_intervene(const RunConfig& cfg, const fs::path& out_dir)
{
    Inputs in = load_inputs(cfg);
    dsl::ModelSpec spec = load_spec(cfg);
    auto model = sim::compile(spec);
    auto ctx = in.data.context();

    const std::size_t horizon =
        cfg.eval.horizon ? *cfg.eval.horizon : eval::default_horizon(in.data.cadence);
    const std::size_t total = in.data.T + horizon;

    sim::ParamField base_params;
    if (cfg.intervene.checkpoint) {
        calib::CalibNet net = calib::CalibNet::load(cfg.base_dir / *cfg.intervene.checkpoint);
        base_params = calib::predict_params(net, in.data, total);
    } else {
        RunConfig sim_cfg = cfg;
        base_params = resolve_params(sim_cfg, in, total);
    }

    std::size_t t_prime;
    if (cfg.intervene.t_prime < 1.0)
        t_prime = static_cast<std::size_t>(cfg.intervene.t_prime * static_cast<double>(total));
    else
        t_prime = static_cast<std::size_t>(cfg.intervene.t_prime);
    require(t_prime <= total, Errc::config_error, "intervene.t_prime beyond the horizon");

    std::vector<int> channels;
    for (const auto& name : cfg.intervene.channels) {
        int c = dsl::channel_index(name);
        require(c >= 0, Errc::config_error, "unknown intervention channel '" + name + "'");
        channels.push_back(c);
    }

    std::vector<double> deltas = cfg.intervene.deltas;
    if (deltas.empty() || deltas.front() != 0.0) {
        bool has_zero = false;
        for (double d : deltas)
            has_zero = has_zero || d == 0.0;
        if (!has_zero)
            deltas.insert(deltas.begin(), 0.0); // baseline
    }

    std::ostringstream sweep;
    sweep << "delta,patch,t,yhat\n";
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    for (double delta : deltas) {
        auto params =
            sim::apply_intervention(base_params, t_prime, delta, channels, cfg.intervene.patches);
        auto traj = sim::simulate(model, ctx, params, total);
        double cumulative = 0.0;
        for (std::size_t t = 0; t < total; ++t)
            for (std::size_t l = 0; l < in.data.L; ++l) {
                double y = traj.yhat.at(t * in.data.L + l);
                cumulative += y;
                sweep << dsl::format_number(delta) << ',' << l << ',' << t << ','
                      << dsl::format_number(y) << '\n';
            }
        summary.push_back({{"delta", delta}, {"cumulative_yhat", cumulative}});
    }
    atomic_write_file(out_dir / "sweep.csv", sweep.str());
    atomic_write_file(out_dir / "summary.json", summary.dump(2) + "\n");
    log::info("intervene: wrote sweep over " + std::to_string(deltas.size()) + " deltas to " +
              (out_dir / "sweep.csv").string());
}

} // namespace epitwin::cli

#include "epitwin/cli/config.hpp"

#include "epitwin/util/error.hpp"
#include "epitwin/util/fs.hpp"

#include <json.hpp>

namespace epitwin::cli {

namespace {

using nlohmann::json;

[[noreturn]] void unknown_key(const std::string& block, const std::string& key,
                              const std::string& valid)
{
    raise(Errc::config_error,
          "unknown key '" + key + "' in " + block + " block; valid keys: " + valid);
}

void parse_bounds(const json& j, std::array<dsl::Bounds, 8>& bounds)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        int c = dsl::channel_index(it.key());
        if (c < 0)
            raise(Errc::config_error,
                  "unknown channel '" + it.key() + "' in bounds block; valid keys: beta, alpha, "
                  "gamma, delta, kappa, epsilon, symprob, mor");
        auto v = it->get<std::vector<double>>();
        require(v.size() == 2 && v[0] >= 0.0 && v[0] < v[1], Errc::config_error,
                "bounds for '" + it.key() + "' must be [lo, hi] with 0 <= lo < hi");
        bounds[static_cast<std::size_t>(c)] = {v[0], v[1]};
    }
}

void parse_train(const json& j, RunConfig::TrainBlock& train)
{
    const std::string valid = "lr, iterations, weight_decay, hidden, cell, window";
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "lr") train.lr = it->get<double>();
        else if (key == "iterations") train.iterations = it->get<long>();
        else if (key == "weight_decay") train.weight_decay = it->get<double>();
        else if (key == "hidden") train.hidden = it->get<std::size_t>();
        else if (key == "cell") train.cell = calib::cell_from(it->get<std::string>());
        else if (key == "window") train.window = it->get<std::size_t>();
        else unknown_key("train", key, valid);
    }
    require(train.iterations >= 1, Errc::config_error, "train.iterations must be >= 1");
}

void parse_eval(const json& j, RunConfig::EvalBlock& eval)
{
    const std::string valid =
        "T_train, H, shifts, oracle, parallel_shifts, train_iterations";
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "T_train") eval.t_train = it->get<std::size_t>();
        else if (key == "H") eval.horizon = it->get<std::size_t>();
        else if (key == "shifts") eval.shifts = it->get<std::vector<std::size_t>>();
        else if (key == "oracle") eval.oracle = it->get<bool>();
        else if (key == "parallel_shifts") eval.parallel_shifts = it->get<bool>();
        else if (key == "train_iterations") eval.train_iterations = it->get<long>();
        else unknown_key("eval", key, valid);
    }
}

void parse_simulate(const json& j, RunConfig::SimulateBlock& sim)
{
    const std::string valid = "params, checkpoint, steps";
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "params") {
            std::array<double, 8> p{};
            for (auto pit = it->begin(); pit != it->end(); ++pit) {
                int c = dsl::channel_index(pit.key());
                if (c < 0)
                    raise(Errc::config_error, "unknown channel '" + pit.key() +
                                                  "' in simulate.params; valid keys are the "
                                                  "eight parameter channels");
                p[static_cast<std::size_t>(c)] = pit->get<double>();
            }
            sim.params = p;
        }
        else if (key == "checkpoint") sim.checkpoint = it->get<std::string>();
        else if (key == "steps") sim.steps = it->get<std::size_t>();
        else unknown_key("simulate", key, valid);
    }
}

void parse_endpoint(const json& j, agent::LlmConfig& cfg)
{
    const std::string valid =
        "base_url, model, api_key, temperature, max_tokens, timeout_seconds, retries";
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "base_url") cfg.base_url = it->get<std::string>();
        else if (key == "model") cfg.model = it->get<std::string>();
        else if (key == "api_key") cfg.api_key = it->get<std::string>();
        else if (key == "temperature") cfg.temperature = it->get<double>();
        else if (key == "max_tokens") cfg.max_tokens = it->get<int>();
        else if (key == "timeout_seconds") cfg.timeout_seconds = it->get<int>();
        else if (key == "retries") cfg.retries = it->get<int>();
        else unknown_key("evolve.endpoint", key, valid);
    }
}

void parse_evolve(const json& j, RunConfig::EvolveBlock& evolve)
{
    const std::string valid =
        "G, k, generator, hybrid, reject_warnings, judge, snippets, endpoint";
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "G") evolve.generations = it->get<int>();
        else if (key == "k") evolve.k = it->get<std::size_t>();
        else if (key == "generator") {
            evolve.generator = it->get<std::string>();
            require(evolve.generator == "mutation" || evolve.generator == "llm",
                    Errc::config_error, "evolve.generator must be 'mutation' or 'llm'");
        }
        else if (key == "hybrid") evolve.hybrid = it->get<bool>();
        else if (key == "reject_warnings")
            evolve.reject_warnings = it->get<std::vector<std::string>>();
        else if (key == "judge") evolve.judge = it->get<bool>();
        else if (key == "snippets") evolve.snippets_dir = it->get<std::string>();
        else if (key == "endpoint") parse_endpoint(*it, evolve.endpoint);
        else unknown_key("evolve", key, valid);
    }
}

void parse_intervene(const json& j, RunConfig::InterveneBlock& iv)
{
    const std::string valid = "t_prime, deltas, channels, patches, checkpoint";
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "t_prime") iv.t_prime = it->get<double>();
        else if (key == "deltas") iv.deltas = it->get<std::vector<double>>();
        else if (key == "channels") iv.channels = it->get<std::vector<std::string>>();
        else if (key == "patches") iv.patches = it->get<std::vector<std::size_t>>();
        else if (key == "checkpoint") iv.checkpoint = it->get<std::string>();
        else unknown_key("intervene", key, valid);
    }
}

} // namespace

RunConfig load_config(const std::filesystem::path& path)
{
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::config_error, "config " + path.string() + ": " + e.what());
    }
    RunConfig cfg;
    cfg.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

    const std::string valid =
        "seed, dataset, scenario, spec, bounds, train, eval, simulate, evolve, intervene";
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& key = it.key();
            if (key == "seed") cfg.seed = it->get<std::uint64_t>();
            else if (key == "dataset") cfg.dataset_path = it->get<std::string>();
            else if (key == "scenario") {
                if (it->is_string()) {
                    // Indirection to a scenario file; its spec_path is
                    // resolved against that file's directory.
                    std::filesystem::path sp = cfg.base_dir / it->get<std::string>();
                    json sj;
                    try {
                        sj = json::parse(read_file(sp));
                    } catch (const nlohmann::json::exception& e) {
                        raise(Errc::config_error, "scenario " + sp.string() + ": " + e.what());
                    }
                    cfg.scenario = eval::scenario_from_json(sj, sp.parent_path());
                } else {
                    cfg.scenario = eval::scenario_from_json(*it, cfg.base_dir);
                }
            }
            else if (key == "spec") cfg.spec_path = it->get<std::string>();
            else if (key == "bounds") parse_bounds(*it, cfg.bounds);
            else if (key == "train") parse_train(*it, cfg.train);
            else if (key == "eval") parse_eval(*it, cfg.eval);
            else if (key == "simulate") parse_simulate(*it, cfg.simulate);
            else if (key == "evolve") parse_evolve(*it, cfg.evolve);
            else if (key == "intervene") parse_intervene(*it, cfg.intervene);
            else unknown_key("top-level", key, valid);
        }
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::config_error, "config " + path.string() + ": " + e.what());
    }
    return cfg;
}

std::string config_reference()
{
    return
        "config keys (JSON), defaults in brackets:\n"
        "  seed                 root seed fanned out to all randomness [0]\n"
        "  dataset              dataset directory (meta.json + data.csv)\n"
        "  scenario             synthetic scenario block:\n"
        "    name [scenario], spec | spec_path, L [3], T [160],\n"
        "    cadence [week], population [10000 + 2500*(l%4)], mixing [0.1],\n"
        "    noise [0], aux_features [3], season_period [52], base, amp\n"
        "  spec                 model file (.nimm)\n"
        "  bounds               per-channel [lo, hi], e.g. {\"beta\": [0, 1]} [all [0,1]]\n"
        "  train                lr [5e-4], iterations [1000], weight_decay [0.01],\n"
        "                       hidden [32], cell [gru], window [full T]\n"
        "  eval                 T_train [104], H [8 weekly / 28 daily], shifts [0,1,2,3],\n"
        "                       oracle [false], parallel_shifts [true],\n"
        "                       train_iterations [train.iterations]\n"
        "  simulate             params {channel: value} | checkpoint PATH, steps [T]\n"
        "  evolve               G [40], k [3], generator [mutation], hybrid [false],\n"
        "                       reject_warnings [], judge [false], snippets DIR,\n"
        "                       endpoint {base_url, model, api_key, temperature [0],\n"
        "                       max_tokens [2048], timeout_seconds [120], retries [2]}\n"
        "  intervene            t_prime [0.8 of horizon], deltas [0,0.2,0.4,0.6,0.8],\n"
        "                       channels [beta], patches [all], checkpoint PATH\n";
}

} // namespace epitwin::cli

#include "epitwin/eval/synth.hpp"

#include "epitwin/dsl/parser.hpp"
#include "epitwin/util/error.hpp"
#include "epitwin/util/fs.hpp"
#include "epitwin/util/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace epitwin::eval {

SynthResult synthesize(const ScenarioConfig& config, std::uint64_t seed)
{
    require(!config.spec_text.empty(), Errc::config_error, "scenario needs a generating spec");
    require(config.L >= 1 && config.T >= 2, Errc::config_error, "scenario needs L >= 1, T >= 2");
    SynthResult out;
    out.truth_spec = dsl::parse(config.spec_text);

    Rng root(seed);
    Rng phase_rng = root.stream(1);
    Rng noise_rng = root.stream(2);

    const std::size_t L = config.L, T = config.T;
    std::vector<double> population = config.population;
    if (population.empty())
        for (std::size_t l = 0; l < L; ++l)
            population.push_back(10000.0 + 2500.0 * static_cast<double>(l % 4));
    require(population.size() == L, Errc::config_error,
            "population must list one entry per patch");

    // Hidden parameter field.
    std::vector<double> phases(L * 8);
    for (auto& p : phases)
        p = phase_rng.uniform();
    std::vector<double> theta(L * T * 8);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t c = 0; c < 8; ++c) {
                double phase = phases[l * 8 + c];
                double v = config.base[c] +
                           config.amp[c] *
                               std::sin(2.0 * std::numbers::pi *
                                        (static_cast<double>(t) / config.season_period + phase));
                theta[(l * T + t) * 8 + c] = std::clamp(v, 0.0, 1.0);
            }
    out.truth_params = sim::ParamField::from_tensor(ad::Tensor::from({L, T, 8}, theta));

    sim::MetapopContext ctx = sim::MetapopContext::mixing(population, config.mixing);
    auto traj = sim::simulate(out.truth_spec, ctx, out.truth_params, T);

    Dataset& data = out.data;
    data.L = L;
    data.T = T;
    data.d = 1 + config.aux_features;
    data.cadence = config.cadence;
    data.population = population;
    data.contact = ctx.contact;
    data.target_feature = 0;
    data.feature_names = {"cases"};
    for (std::size_t k = 1; k < data.d; ++k)
        data.feature_names.push_back("sig" + std::to_string(k));
    data.values.assign(L * T * data.d, 0.0);
    data.provenance = "synthetic scenario '" + config.name + "', seed " + std::to_string(seed);

    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t t = 0; t < T; ++t) {
            double y = traj.yhat.at(t * L + l);
            if (config.noise > 0.0) {
                double z = noise_rng.normal();
                y *= std::exp(config.noise * z - 0.5 * config.noise * config.noise);
            }
            data.at_mut(l, t, 0) = std::max(0.0, y);
        }

    // Auxiliary features: lagged moving averages of hidden channels,
    // scaled to a surveillance-signal magnitude.
    for (std::size_t k = 1; k < data.d; ++k) {
        std::size_t channel = (k * 3) % 8;
        std::size_t lag = 1 + (k % 3);
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t t = 0; t < T; ++t) {
                double acc = 0.0;
                int n = 0;
                for (std::size_t w = 0; w < 3; ++w) {
                    std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) -
                                         static_cast<std::ptrdiff_t>(lag + w);
                    if (src < 0)
                        src = 0;
                    acc += theta[(l * T + static_cast<std::size_t>(src)) * 8 + channel];
                    ++n;
                }
                data.at_mut(l, t, k) = 100.0 * acc / static_cast<double>(n);
            }
    }
    return out;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir)
{
    ScenarioConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "name") cfg.name = it->get<std::string>();
        else if (key == "spec") cfg.spec_text = it->get<std::string>();
        else if (key == "spec_path") cfg.spec_text = read_file(base_dir / it->get<std::string>());
        else if (key == "L") cfg.L = it->get<std::size_t>();
        else if (key == "T") cfg.T = it->get<std::size_t>();
        else if (key == "cadence") cfg.cadence = cadence_from(it->get<std::string>());
        else if (key == "population") {
            if (it->is_number()) {
                cfg.population.assign(cfg.L, it->get<double>());
            } else {
                cfg.population = it->get<std::vector<double>>();
            }
        }
        else if (key == "mixing") cfg.mixing = it->get<double>();
        else if (key == "noise") cfg.noise = it->get<double>();
        else if (key == "aux_features") cfg.aux_features = it->get<std::size_t>();
        else if (key == "season_period") cfg.season_period = it->get<double>();
        else if (key == "base") {
            auto v = it->get<std::vector<double>>();
            require(v.size() == 8, Errc::config_error, "scenario base needs 8 entries");
            std::copy(v.begin(), v.end(), cfg.base.begin());
        }
        else if (key == "amp") {
            auto v = it->get<std::vector<double>>();
            require(v.size() == 8, Errc::config_error, "scenario amp needs 8 entries");
            std::copy(v.begin(), v.end(), cfg.amp.begin());
        }
        else
            raise(Errc::config_error,
                  "unknown scenario key '" + key +
                      "'; valid keys: name, spec, spec_path, L, T, cadence, population, "
                      "mixing, noise, aux_features, season_period, base, amp");
    }
    require(!cfg.spec_text.empty(), Errc::config_error,
            "scenario block needs 'spec' or 'spec_path'");
    // A scalar population given before L is resolved above; re-broadcast.
    if (cfg.population.size() == 1 && cfg.L > 1)
        cfg.population.assign(cfg.L, cfg.population[0]);
    return cfg;
}

} // namespace epitwin::eval

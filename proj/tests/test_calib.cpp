#include <doctest.h>

#include "epitwin/calib/calibnet.hpp"
#include "epitwin/calib/train.hpp"
#include "epitwin/dsl/parser.hpp"
#include "epitwin/eval/synth.hpp"
#include "epitwin/kern/kernels.hpp"
#include "epitwin/util/error.hpp"
#include "epitwin/util/fs.hpp"
#include "epitwin/util/rng.hpp"
#include "support/paths.hpp"

#include <cmath>
#include <filesystem>

using namespace epitwin;

namespace {

eval::SynthResult small_scenario(std::uint64_t seed)
{
    eval::ScenarioConfig cfg;
    cfg.name = "calib_small";
    cfg.spec_text = read_file(testsupport::fixture("data/specs/seirm.nimm"));
    cfg.L = 2;
    cfg.T = 40;
    cfg.population = {3000, 5000};
    cfg.mixing = 0.1;
    cfg.aux_features = 2;
    return eval::synthesize(cfg, seed);
}

calib::NetConfig small_net(std::size_t input_dim, std::uint64_t seed = 1)
{
    calib::NetConfig cfg;
    cfg.input_dim = input_dim;
    cfg.hidden = 8;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("predictions stay strictly inside the channel bounds")
{
    auto synth = small_scenario(2);
    calib::CalibNet net(small_net(synth.data.d));
    net.fit_normalizer(synth.data);
    auto params = calib::predict_params(net, synth.data, synth.data.T);
    CHECK(params.patches() == 2);
    CHECK(params.steps() == synth.data.T);
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        const auto& b = params.bounds[i % 8];
        CHECK(params.values.at(i) > b.lo);
        CHECK(params.values.at(i) < b.hi);
    }
}

TEST_CASE("zero weights emit the bound midpoints")
{
    auto synth = small_scenario(3);
    calib::CalibNet net(small_net(synth.data.d));
    net.fit_normalizer(synth.data);
    for (auto& w : net.weights())
        for (auto& v : w.values_mut())
            v = 0.0;
    auto params = calib::predict_params(net, synth.data, 5);
    for (std::size_t i = 0; i < params.values.size(); ++i)
        CHECK(params.values.at(i) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("locations are processed independently: permuting rows permutes the field")
{
    auto synth = small_scenario(4);
    const auto& data = synth.data;
    calib::CalibNet net(small_net(data.d));
    net.fit_normalizer(data);
    auto params = calib::predict_params(net, data, data.T);

    eval::Dataset swapped = data;
    for (std::size_t t = 0; t < data.T; ++t)
        for (std::size_t f = 0; f < data.d; ++f) {
            swapped.at_mut(0, t, f) = data.at(1, t, f);
            swapped.at_mut(1, t, f) = data.at(0, t, f);
        }
    std::swap(swapped.population[0], swapped.population[1]);
    auto pswap = calib::predict_params(net, swapped, data.T);

    const std::size_t block = data.T * 8;
    for (std::size_t i = 0; i < block; ++i) {
        CHECK(pswap.values.at(i) == params.values.at(block + i));
        CHECK(pswap.values.at(block + i) == params.values.at(i));
    }
}

TEST_CASE("forecast regime holds the final head output")
{
    auto synth = small_scenario(5);
    calib::CalibNet net(small_net(synth.data.d));
    net.fit_normalizer(synth.data);
    const std::size_t T = synth.data.T, H = 6;
    auto params = calib::predict_params(net, synth.data, T + H);
    const std::size_t L = synth.data.L;
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t t = T; t < T + H; ++t)
            for (std::size_t c = 0; c < 8; ++c)
                CHECK(params.values.at((l * (T + H) + t) * 8 + c) ==
                      params.values.at((l * (T + H) + (T - 1)) * 8 + c));
}

TEST_CASE("feature width mismatch is a contract error")
{
    auto synth = small_scenario(6);
    calib::CalibNet net(small_net(synth.data.d + 1));
    try {
        calib::predict_params(net, synth.data, 4);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::contract_error);
    }
}

TEST_CASE("training: curve length, determinism, backend independence")
{
    auto synth = small_scenario(7);
    auto spec = synth.truth_spec;
    auto ctx = synth.data.context();

    calib::TrainConfig tcfg;
    tcfg.iterations = 1;
    calib::CalibNet net1(small_net(synth.data.d));
    net1.fit_normalizer(synth.data);
    auto one = calib::train(spec, ctx, net1, synth.data, 0, tcfg);
    CHECK(one.loss_curve.size() == 1);

    auto run = [&](kern::Backend backend) {
        kern::set_backend(backend);
        calib::CalibNet net(small_net(synth.data.d, 42));
        net.fit_normalizer(synth.data);
        calib::TrainConfig cfg;
        cfg.iterations = 12;
        return calib::train(spec, ctx, net, synth.data, 0, cfg).loss_curve;
    };
    auto a = run(kern::Backend::openmp);
    auto b = run(kern::Backend::openmp);
    auto c = run(kern::Backend::serial);
    kern::set_backend(kern::openmp_compiled() ? kern::Backend::openmp : kern::Backend::serial);
    CHECK(a == b); // bit-identical
    CHECK(a == c);
}

TEST_CASE("training reduces the loss on a short run")
{
    auto synth = small_scenario(8);
    calib::CalibNet net(small_net(synth.data.d, 3));
    net.fit_normalizer(synth.data);
    calib::TrainConfig tcfg;
    tcfg.iterations = 80;
    tcfg.lr = 2e-3;
    auto result = calib::train(synth.truth_spec, synth.data.context(), net, synth.data, 0, tcfg);
    CHECK(result.loss_curve.back() < result.loss_curve.front());
}

TEST_CASE("end-to-end gradients match finite differences through the simulator")
{
    auto synth = small_scenario(9);
    eval::Dataset window = synth.data.window(0, 8);
    auto model = sim::compile(synth.truth_spec);
    auto ctx = window.context();

    calib::CalibNet net(small_net(window.d, 5));
    net.fit_normalizer(window);

    // Loss as a plain function of the flattened weight vector.
    auto loss_at = [&](const std::vector<double>& flat) {
        calib::CalibNet probe(small_net(window.d, 5));
        probe.fit_normalizer(window);
        std::size_t off = 0;
        for (auto& w : probe.weights()) {
            auto span = w.values_mut();
            for (auto& v : span)
                v = flat[off++];
        }
        auto params = probe.forward(window, window.T, nullptr);
        auto traj = sim::simulate(model, ctx, params, window.T);
        ad::Tensor y = window.target_matrix(0, window.T);
        return ad::sqrt(ad::mean(ad::square(ad::sub(traj.yhat, y)))).item();
    };

    std::vector<double> flat;
    for (const auto& w : net.weights())
        for (double v : w.values())
            flat.push_back(v);

    ad::Tape tape;
    std::vector<ad::Tensor> tracked;
    auto params = net.forward(window, window.T, &tape, &tracked);
    auto traj = sim::simulate(model, ctx, params, window.T);
    ad::Tensor y = window.target_matrix(0, window.T);
    ad::Tensor loss = ad::sqrt(ad::mean(ad::square(ad::sub(traj.yhat, y))));
    auto grads = tape.backward(loss);

    std::vector<double> grad_flat;
    for (const auto& leaf : tracked)
        for (double v : grads.at(leaf).values())
            grad_flat.push_back(v);

    const double h = 1e-6;
    Rng rng(99);
    int checked = 0;
    while (checked < 10) {
        std::size_t idx = rng.below(flat.size());
        auto up = flat, down = flat;
        up[idx] += h;
        down[idx] -= h;
        double fd = (loss_at(up) - loss_at(down)) / (2 * h);
        double got = grad_flat[idx];
        double denom = std::fmax(std::fmax(std::fabs(fd), std::fabs(got)), 1e-6);
        INFO("weight ", idx, " fd ", fd, " tape ", got);
        CHECK(std::fabs(fd - got) / denom <= 1e-3);
        ++checked;
    }
}

TEST_CASE("checkpoint round trip preserves predictions bit-exactly")
{
    auto synth = small_scenario(10);
    calib::CalibNet net(small_net(synth.data.d, 11));
    net.fit_normalizer(synth.data);

    auto dir = std::filesystem::temp_directory_path() / "epitwin_ckpt_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "net.bin";
    net.save(path);
    auto loaded = calib::CalibNet::load(path);
    std::filesystem::remove_all(dir);

    CHECK(loaded.config().hidden == net.config().hidden);
    CHECK(loaded.feature_mean() == net.feature_mean());
    auto a = calib::predict_params(net, synth.data, synth.data.T + 4);
    auto b = calib::predict_params(loaded, synth.data, synth.data.T + 4);
    CHECK(a.values.identical(b.values));
}

TEST_CASE("forecast shapes")
{
    auto synth = small_scenario(12);
    calib::CalibNet net(small_net(synth.data.d, 13));
    net.fit_normalizer(synth.data);
    auto ctx = synth.data.context();

    auto empty = calib::forecast(synth.truth_spec, ctx, net, synth.data, 0);
    CHECK(empty.shape() == ad::Shape{0, 2});

    auto fc = calib::forecast(synth.truth_spec, ctx, net, synth.data, 5);
    CHECK(fc.shape() == ad::Shape{5, 2});
    CHECK(fc.all_finite());
}

TEST_CASE("divergence during training reports the iteration")
{
    auto synth = small_scenario(14);
    // Quadratic mass creation overflows within a few steps.
    auto blow = dsl::parse(
        "model blow { compartments S, E, I; flow S -> E : S * S; "
        "flow E -> S : E * E; flow E -> I : alpha * E; "
        "init S = N - 1; init E = 0; init I = 1; observe I; }");
    calib::CalibNet net(small_net(synth.data.d, 15));
    net.fit_normalizer(synth.data);
    calib::TrainConfig tcfg;
    tcfg.iterations = 3;
    try {
        calib::train(blow, synth.data.context(), net, synth.data, 0, tcfg);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::sim_divergence);
        CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
}

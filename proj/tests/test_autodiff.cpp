#include <doctest.h>

#include "epitwin/ad/adamw.hpp"
#include "epitwin/ad/ops.hpp"
#include "epitwin/ad/tensor.hpp"
#include "epitwin/util/error.hpp"
#include "support/random_graphs.hpp"

#include <cmath>

using namespace epitwin;
using namespace epitwin::ad;

TEST_CASE("primitive forward values")
{
    CHECK(sigmoid(Tensor::scalar(0.0)).item() == doctest::Approx(0.5).epsilon(1e-15));

    Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from({2, 1}, {1, 1});
    Tensor c = matmul(a, b);
    CHECK(c.shape() == Shape{2, 1});
    CHECK(c.at(0) == 3.0);
    CHECK(c.at(1) == 7.0);

    Tensor x = Tensor::scalar(-0.5);
    CHECK(clamp(x, 0.0, 1.0).item() == 0.0);
}

TEST_CASE("clamp boundary gradient is zero")
{
    Tape tape;
    Tensor x = tape.var(Tensor::from({3}, {-0.5, 0.5, 1.0}));
    Tensor y = sum(clamp(x, 0.0, 1.0));
    Gradients g = tape.backward(y);
    const Tensor& gx = g.at(x);
    CHECK(gx.at(0) == 0.0); // below
    CHECK(gx.at(1) == 1.0); // strictly inside
    CHECK(gx.at(2) == 0.0); // at the bound
}

TEST_CASE("backward of sum(w*w) and mean(w)")
{
    {
        Tape tape;
        Tensor w = tape.var(Tensor::from({3}, {1, 2, 3}));
        Tensor root = sum(mul(w, w));
        Gradients g = tape.backward(root);
        const Tensor& gw = g.at(w);
        CHECK(gw.at(0) == 2.0);
        CHECK(gw.at(1) == 4.0);
        CHECK(gw.at(2) == 6.0);
    }
    {
        Tape tape;
        Tensor w = tape.var(Tensor::from({4}, {5, 6, 7, 8}));
        Gradients g = tape.backward(mean(w));
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(g.at(w).at(i) == 0.25);
    }
}

TEST_CASE("untouched leaves get zero gradients")
{
    Tape tape;
    Tensor w = tape.var(Tensor::from({2}, {1, 2}));
    Tensor u = tape.var(Tensor::from({3}, {4, 5, 6}));
    Gradients g = tape.backward(sum(square(w)));
    CHECK(g.at(u).shape() == Shape{3});
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(g.at(u).at(i) == 0.0);
}

TEST_CASE("fan-out gradient is the sum of path contributions")
{
    Tape t1;
    Tensor x1 = t1.var(Tensor::from({4}, {0.3, -1.2, 2.0, 0.7}));
    Gradients g1 = t1.backward(sum(add(x1, x1)));

    Tape t2;
    Tensor x2 = t2.var(Tensor::from({4}, {0.3, -1.2, 2.0, 0.7}));
    Gradients g2 = t2.backward(sum(scale(x2, 2.0)));

    CHECK(g1.at(x1).identical(g2.at(x2)));
}

TEST_CASE("contract and guard errors")
{
    Tape tape;
    Tensor x = tape.var(Tensor::from({2}, {1, 2}));
    Tensor y = add(x, x); // non-scalar
    CHECK_THROWS_WITH_AS(tape.backward(y), doctest::Contains("scalar"), Error);

    CHECK_THROWS_AS(add(Tensor::from({2}, {1, 2}), Tensor::from({3}, {1, 2, 3})), Error);
    try {
        add(Tensor::from({2}, {1, 2}), Tensor::from({3}, {1, 2, 3}));
    } catch (const Error& e) {
        CHECK(e.code() == Errc::shape_error);
    }

    try {
        div(Tensor::scalar(1.0), Tensor::scalar(1e-13));
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::numeric_guard_error);
    }

    Tape other;
    Tensor z = other.var(Tensor::from({2}, {1, 1}));
    CHECK_THROWS_AS(add(x, z), Error);
}

TEST_CASE("leading-singleton broadcast and its gradient")
{
    Tape tape;
    Tensor bias = tape.var(Tensor::from({1, 3}, {1, 2, 3}));
    Tensor m = tape.var(Tensor::from({2, 3}, {10, 20, 30, 40, 50, 60}));
    Tensor out = add(m, bias);
    CHECK(out.at(0) == 11.0);
    CHECK(out.at(5) == 63.0);
    Gradients g = tape.backward(sum(out));
    // Bias gradient folds the broadcast axis.
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(g.at(bias).at(i) == 2.0);
}

TEST_CASE("random graphs match central finite differences")
{
    Rng rng(2024);
    int checked = 0;
    for (int i = 0; i < 60; ++i) {
        Rng sub = rng.stream(static_cast<std::uint64_t>(i));
        auto prog = testsupport::sample_graph(sub);
        auto res = testsupport::check_gradients_fd(prog);
        INFO("graph ", i, ": ", res.detail);
        CHECK(res.ok);
        ++checked;
    }
    CHECK(checked == 60);
}

TEST_CASE("tape replay is deterministic")
{
    auto run = [] {
        Rng rng(77);
        auto prog = testsupport::sample_graph(rng);
        Tape tape;
        std::vector<Tensor> leaves;
        Tensor root = testsupport::eval_graph(prog, prog.leaf_values, &tape, &leaves);
        Gradients g = tape.backward(root);
        std::vector<double> flat;
        for (const auto& leaf : leaves)
            for (double v : g.at(leaf).values())
                flat.push_back(v);
        return flat;
    };
    auto a = run();
    auto b = run();
    CHECK(a == b);
}

TEST_CASE("slice, select, stack and transpose round gradients correctly")
{
    Tape tape;
    Tensor x = tape.var(Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}));
    Tensor row1 = select(x, 0, 1); // (3) = {4,5,6}
    CHECK(row1.at(0) == 4.0);
    Tensor mid = slice(x, 1, 1, 2); // (2,2) = {2,3,5,6}
    CHECK(mid.at(0) == 2.0);
    CHECK(mid.at(3) == 6.0);
    Tensor t = transpose01(x); // (3,2)
    CHECK(t.at(1) == 4.0);

    std::vector<Tensor> parts = {row1, select(x, 0, 0)};
    Tensor stk = stack(parts);                       // (2,3)
    Tensor row0 = transpose01(slice(t, 1, 0, 1));    // (1,3) = x[0,:]
    Gradients g = tape.backward(sum(add(stk, row0)));
    // stack path touches every element of x once; the broadcast row
    // adds 2 to each element of x's first row.
    const Tensor& gx = g.at(x);
    CHECK(gx.at(0) == 3.0);
    CHECK(gx.at(1) == 3.0);
    CHECK(gx.at(2) == 3.0);
    CHECK(gx.at(3) == 1.0);
    CHECK(gx.at(4) == 1.0);
    CHECK(gx.at(5) == 1.0);
}

TEST_CASE("adamw frozen examples")
{
    AdamWConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.0;

    // grad = 0, wd = 0: unchanged
    {
        std::vector<Tensor> w = {Tensor::from({2}, {1.5, -0.5})};
        std::vector<Tensor> g = {Tensor::zeros({2})};
        auto st = AdamWState::like(w);
        auto out = adamw_step(w, g, st, cfg, 1);
        CHECK(out.applied);
        CHECK(w[0].at(0) == 1.5);
        CHECK(w[0].at(1) == -0.5);
    }

    // single weight, first bias-corrected step moves by ~lr
    {
        std::vector<Tensor> w = {Tensor::scalar(1.0)};
        std::vector<Tensor> g = {Tensor::scalar(1.0)};
        auto st = AdamWState::like(w);
        adamw_step(w, g, st, cfg, 1);
        // mhat = 1, vhat = 1 -> w = 1 - 0.1 * 1/(1 + eps)
        double expect = 1.0 - 0.1 * (1.0 / (1.0 + 1e-8));
        CHECK(w[0].item() == doctest::Approx(expect).epsilon(1e-14));
        CHECK(w[0].item() == doctest::Approx(0.9).epsilon(1e-6));
    }

    // decoupled decay with zero gradient shrinks by lr*wd*w
    {
        AdamWConfig dcfg;
        dcfg.lr = 0.05;
        dcfg.weight_decay = 0.2;
        std::vector<Tensor> w = {Tensor::scalar(2.0)};
        std::vector<Tensor> g = {Tensor::scalar(0.0)};
        auto st = AdamWState::like(w);
        adamw_step(w, g, st, dcfg, 1);
        CHECK(w[0].item() == doctest::Approx(2.0 - 0.05 * 0.2 * 2.0).epsilon(1e-14));
    }

    // non-finite gradient: step skipped and reported
    {
        std::vector<Tensor> w = {Tensor::scalar(1.0)};
        std::vector<Tensor> g = {Tensor::scalar(std::nan(""))};
        auto st = AdamWState::like(w);
        auto out = adamw_step(w, g, st, cfg, 1);
        CHECK_FALSE(out.applied);
        CHECK(out.note.find("OPTIMIZER_DIVERGENCE") != std::string::npos);
        CHECK(w[0].item() == 1.0);
        CHECK(st.m[0].at(0) == 0.0);
    }
}

TEST_CASE("adamw recurrence matches an independent scalar evaluation")
{
    // Hand-rolled recurrence over 5 steps, one weight.
    AdamWConfig cfg;
    cfg.lr = 0.01;
    cfg.weight_decay = 0.05;
    std::vector<double> gs = {0.4, -0.2, 0.1, 0.7, -0.3};

    double w_ref = 0.8, m = 0, v = 0;
    for (int t = 1; t <= 5; ++t) {
        double g = gs[static_cast<std::size_t>(t - 1)];
        m = cfg.beta1 * m + (1 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
        double mhat = m / (1 - std::pow(cfg.beta1, t));
        double vhat = v / (1 - std::pow(cfg.beta2, t));
        w_ref -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * w_ref);
    }

    std::vector<Tensor> w = {Tensor::scalar(0.8)};
    auto st = AdamWState::like(w);
    for (int t = 1; t <= 5; ++t) {
        std::vector<Tensor> g = {Tensor::scalar(gs[static_cast<std::size_t>(t - 1)])};
        adamw_step(w, g, st, cfg, t);
    }
    CHECK(w[0].item() == doctest::Approx(w_ref).epsilon(1e-15));
}

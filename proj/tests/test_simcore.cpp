#include <doctest.h>

#include "epitwin/dsl/parser.hpp"
#include "epitwin/sim/simulator.hpp"
#include "epitwin/util/error.hpp"
#include "epitwin/util/fs.hpp"
#include "epitwin/util/rng.hpp"
#include "support/oracles.hpp"
#include "support/paths.hpp"

#include <cmath>

using namespace epitwin;
using namespace epitwin::ad;

namespace {

dsl::ModelSpec canonical()
{
    return dsl::parse(read_file(testsupport::fixture("data/specs/seirm.nimm")));
}

// beta, alpha, gamma, delta, kappa, epsilon, symprob, mor
constexpr std::array<double, 8> kHandParams = {0.3, 0.2, 0.1, 0.0, 0.0, 0.0, 0.0, 0.05};

} // namespace

TEST_CASE("effective infections as column contractions")
{
    auto id_ctx = sim::MetapopContext::identity({1000, 2000});
    Tensor infected = Tensor::from({2}, {10, 30});
    auto [i_eff, n_eff] = sim::effective_infections(id_ctx, infected);
    CHECK(i_eff.at(0) == 10.0);
    CHECK(i_eff.at(1) == 30.0);
    CHECK(n_eff.at(0) == 1000.0);

    sim::MetapopContext half;
    half.contact = Tensor::from({2, 2}, {0.5, 0.5, 0.5, 0.5});
    half.population = Tensor::from({2}, {1000, 1000});
    auto [i2, n2] = sim::effective_infections(half, infected);
    CHECK(i2.at(0) == 20.0);
    CHECK(i2.at(1) == 20.0);
    CHECK(n2.at(0) == 1000.0);

    auto [iz, nz] = sim::effective_infections(half, Tensor::zeros({2}));
    CHECK(iz.at(0) == 0.0);
    CHECK(iz.at(1) == 0.0);
}

TEST_CASE("force of infection")
{
    auto ctx = sim::MetapopContext::identity({1000});
    Tensor beta = Tensor::from({1}, {0.3});
    Tensor infected = Tensor::from({1}, {10});
    Tensor lambda = sim::force_of_infection(beta, ctx, infected);
    CHECK(lambda.at(0) == doctest::Approx(0.003).epsilon(1e-14));

    CHECK(sim::force_of_infection(Tensor::zeros({1}), ctx, infected).at(0) == 0.0);

    // I = N with identity contacts gives lambda = beta
    Tensor full = Tensor::from({1}, {1000});
    CHECK(sim::force_of_infection(beta, ctx, full).at(0) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("hand-evaluated single-patch SEIRM step")
{
    auto model = sim::compile(canonical());
    auto ctx = sim::MetapopContext::identity({1000});
    auto state = sim::initial_state(model, ctx);
    REQUIRE(state.size() == 5);
    CHECK(state[0].at(0) == 990.0);
    CHECK(state[2].at(0) == 10.0);

    auto params = sim::ParamField::constant(1, 1, kHandParams);
    Tensor params_t = ad::reshape(params.values, {1, 8});
    auto next = sim::step(model, ctx, state, params_t);

    CHECK(next.state[0].at(0) == doctest::Approx(987.03).epsilon(1e-14));
    CHECK(next.state[1].at(0) == doctest::Approx(2.97).epsilon(1e-14));
    CHECK(next.state[2].at(0) == doctest::Approx(8.5).epsilon(1e-14));
    CHECK(next.state[3].at(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(next.state[4].at(0) == doctest::Approx(0.5).epsilon(1e-14));

    double total = 0;
    for (const auto& s : next.state)
        total += s.at(0);
    CHECK(total == doctest::Approx(1000.0).epsilon(1e-13));

    // Incidence observation on the pre-step state: alpha * E = 0.
    CHECK(next.observed.at(0) == 0.0);
    CHECK(next.clamped_mass == 0.0);
}

TEST_CASE("two-step iterate matches the hand oracle")
{
    auto model = sim::compile(canonical());
    auto ctx = sim::MetapopContext::identity({1000});
    auto params = sim::ParamField::constant(1, 2, kHandParams);
    auto traj = sim::simulate(model, ctx, params, 2);

    testsupport::SeirmState s{990, 0, 10, 0, 0};
    testsupport::SeirmParams p{0.3, 0.2, 0.1, 0.0, 0.05};
    s = testsupport::seirm_hand_step(s, p, 1000);
    s = testsupport::seirm_hand_step(s, p, 1000);

    // states[c] has shape (3, 1); row 2 is the final state
    CHECK(traj.states[0].at(2) == doctest::Approx(s.S).epsilon(1e-13));
    CHECK(traj.states[1].at(2) == doctest::Approx(s.E).epsilon(1e-13));
    CHECK(traj.states[2].at(2) == doctest::Approx(s.I).epsilon(1e-13));
    CHECK(traj.states[3].at(2) == doctest::Approx(s.R).epsilon(1e-13));
    CHECK(traj.states[4].at(2) == doctest::Approx(s.M).epsilon(1e-13));
}

TEST_CASE("zero parameters leave the state unchanged")
{
    auto model = sim::compile(canonical());
    auto ctx = sim::MetapopContext::identity({500});
    auto state = sim::initial_state(model, ctx);
    auto params = sim::ParamField::constant(1, 1, {});
    auto next = sim::step(model, ctx, state, ad::reshape(params.values, {1, 8}));
    for (std::size_t c = 0; c < state.size(); ++c)
        CHECK(next.state[c].identical(state[c].detach()));
}

TEST_CASE("symmetric patches evolve identically")
{
    auto model = sim::compile(canonical());
    auto ctx = sim::MetapopContext::mixing({1000, 1000}, 0.2);
    auto params = sim::ParamField::constant(2, 50, kHandParams);
    auto traj = sim::simulate(model, ctx, params, 50);
    for (const auto& s : traj.states)
        for (std::size_t t = 0; t < 51; ++t)
            CHECK(s.at(t * 2) == s.at(t * 2 + 1));
}

TEST_CASE("zero-horizon trajectory is just the init")
{
    auto model = sim::compile(canonical());
    auto ctx = sim::MetapopContext::identity({1000});
    auto params = sim::ParamField::constant(1, 0, kHandParams);
    auto traj = sim::simulate(model, ctx, params, 0);
    CHECK(traj.yhat.shape() == Shape{0, 1});
    CHECK(traj.states[0].shape() == Shape{1, 1});
    CHECK(traj.states[0].at(0) == 990.0);
}

TEST_CASE("closed model conserves per-patch mass over 200 steps")
{
    auto model = sim::compile(canonical());
    auto ctx = sim::MetapopContext::mixing({1000, 3000, 2000}, 0.15);
    Rng rng(5);
    // Bounded draws keeping every per-compartment outflow below the
    // stock, so no clamping occurs and mass is exactly conserved.
    for (int seed = 0; seed < 5; ++seed) {
        Rng sub = rng.stream(static_cast<std::uint64_t>(seed));
        std::vector<double> vals;
        for (std::size_t i = 0; i < 3 * 200 * 8; ++i)
            vals.push_back(sub.uniform(0.0, 0.45));
        sim::ParamField params;
        params.values = Tensor::from({3, 200, 8}, std::move(vals));
        auto traj = sim::simulate(model, ctx, params, 200);
        CHECK(traj.clamped_mass == 0.0);

        for (std::size_t l = 0; l < 3; ++l) {
            double init_mass = 0, final_mass = 0;
            for (const auto& s : traj.states) {
                init_mass += s.at(l);
                final_mass += s.at(200 * 3 + l);
            }
            CHECK(std::fabs(final_mass - init_mass) / init_mass <= 1e-9);
        }
    }
}

TEST_CASE("simulator gradients with respect to parameters match finite differences")
{
    auto model = sim::compile(canonical());
    auto ctx = sim::MetapopContext::mixing({1000, 2000}, 0.25);
    const std::size_t L = 2, T = 10;

    Rng rng(17);
    std::vector<double> base(L * T * 8);
    for (auto& v : base)
        v = rng.uniform(0.05, 0.4);

    auto sum_yhat = [&](const std::vector<double>& vals) {
        sim::ParamField pf;
        pf.values = Tensor::from({L, T, 8}, vals);
        auto traj = sim::simulate(model, ctx, pf, T);
        return ad::sum(traj.yhat).item();
    };

    Tape tape;
    Tensor leaf = tape.var(Tensor::from({L, T, 8}, base));
    sim::ParamField pf;
    pf.values = leaf;
    auto traj = sim::simulate(model, ctx, pf, T);
    Gradients grads = tape.backward(ad::sum(traj.yhat));
    const Tensor& g = grads.at(leaf);

    // Probe a deterministic sample of entries with central differences.
    const double h = 1e-6;
    for (std::size_t idx = 0; idx < base.size(); idx += 13) {
        auto up = base, down = base;
        up[idx] += h;
        down[idx] -= h;
        double fd = (sum_yhat(up) - sum_yhat(down)) / (2 * h);
        double got = g.at(idx);
        double denom = std::fmax(std::fmax(std::fabs(fd), std::fabs(got)), 1e-8);
        INFO("entry ", idx, " fd ", fd, " tape ", got);
        CHECK(std::fabs(fd - got) / denom <= 1e-4);
    }
}

TEST_CASE("patch permutation symmetry")
{
    auto model = sim::compile(canonical());
    std::vector<double> pop = {1000, 2000, 3000};
    std::vector<double> contact = {0.7, 0.2, 0.1,
                                   0.1, 0.8, 0.1,
                                   0.05, 0.15, 0.8};
    sim::MetapopContext ctx;
    ctx.contact = Tensor::from({3, 3}, contact);
    ctx.population = Tensor::from({3}, pop);

    Rng rng(23);
    std::vector<double> vals(3 * 30 * 8);
    for (auto& v : vals)
        v = rng.uniform(0.0, 0.5);
    sim::ParamField params;
    params.values = Tensor::from({3, 30, 8}, vals);
    auto traj = sim::simulate(model, ctx, params, 30);

    // Permutation (0,1,2) -> (2,0,1): patch p of the permuted system is
    // patch perm[p] of the original.
    std::array<std::size_t, 3> perm = {2, 0, 1};
    sim::MetapopContext pctx;
    std::vector<double> ppop(3), pcontact(9);
    for (std::size_t i = 0; i < 3; ++i) {
        ppop[i] = pop[perm[i]];
        for (std::size_t j = 0; j < 3; ++j)
            pcontact[i * 3 + j] = contact[perm[i] * 3 + perm[j]];
    }
    pctx.contact = Tensor::from({3, 3}, pcontact);
    pctx.population = Tensor::from({3}, ppop);

    std::vector<double> pvals(3 * 30 * 8);
    for (std::size_t l = 0; l < 3; ++l)
        for (std::size_t i = 0; i < 30 * 8; ++i)
            pvals[l * 30 * 8 + i] = vals[perm[l] * 30 * 8 + i];
    sim::ParamField pparams;
    pparams.values = Tensor::from({3, 30, 8}, pvals);
    auto ptraj = sim::simulate(model, pctx, pparams, 30);

    for (std::size_t c = 0; c < traj.states.size(); ++c)
        for (std::size_t t = 0; t <= 30; ++t)
            for (std::size_t l = 0; l < 3; ++l)
                CHECK(ptraj.states[c].at(t * 3 + l) ==
                      doctest::Approx(traj.states[c].at(t * 3 + perm[l])).epsilon(1e-12));
}

TEST_CASE("intervention transform")
{
    Rng rng(31);
    std::vector<double> vals(2 * 20 * 8);
    for (auto& v : vals)
        v = rng.uniform(0.0, 1.0);
    sim::ParamField params;
    params.values = Tensor::from({2, 20, 8}, vals);

    auto same = sim::apply_intervention(params, 10, 0.0);
    CHECK(same.values.identical(params.values));

    auto zeroed = sim::apply_intervention(params, 10, 1.0);
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t t = 0; t < 20; ++t) {
            double beta = zeroed.values.at((l * 20 + t) * 8);
            if (t >= 10)
                CHECK(beta == 0.0);
            else
                CHECK(beta == vals[(l * 20 + t) * 8]);
        }

    sim::ParamField fixed;
    fixed.values = Tensor::full({1, 2, 8}, 0.4);
    auto halved = sim::apply_intervention(fixed, 1, 0.5);
    CHECK(halved.values.at(8) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(halved.values.at(0) == 0.4);
    // non-beta channels untouched
    CHECK(halved.values.at(9) == 0.4);

    CHECK_THROWS_AS(sim::apply_intervention(params, 0, 1.5), Error);
    CHECK_THROWS_AS(sim::apply_intervention(params, 21, 0.5), Error);
}

TEST_CASE("divergent dynamics raise SIM_DIVERGENCE with the step index")
{
    auto spec = dsl::parse(
        "model blow { compartments S, E, I; flow S -> E : 1000000 * S; "
        "flow E -> S : 1000000 * E; flow E -> I : alpha * E; "
        "init S = N - 1; init E = 0; init I = 1; observe I; }");
    auto ctx = sim::MetapopContext::identity({1000});
    auto params = sim::ParamField::constant(1, 100, {0, 0.2, 0, 0, 0, 0, 0, 0});
    try {
        sim::simulate(spec, ctx, params, 100);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::sim_divergence);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("trajectory CSV layout")
{
    auto model = sim::compile(canonical());
    auto ctx = sim::MetapopContext::identity({1000, 500});
    auto params = sim::ParamField::constant(2, 3, kHandParams);
    auto traj = sim::simulate(model, ctx, params, 3);
    std::string csv = sim::trajectory_csv(traj);
    CHECK(csv.rfind("patch,t,S,E,I,R,M,yhat\n", 0) == 0);
    // header + 2 patches x 4 rows
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 4);
}

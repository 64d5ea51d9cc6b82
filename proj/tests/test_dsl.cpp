#include <doctest.h>

#include "epitwin/dsl/parser.hpp"
#include "epitwin/dsl/printer.hpp"
#include "epitwin/dsl/sampler.hpp"
#include "epitwin/dsl/verify.hpp"
#include "epitwin/sim/simulator.hpp"
#include "epitwin/util/error.hpp"
#include "epitwin/util/fs.hpp"
#include "epitwin/util/rng.hpp"
#include "support/paths.hpp"

using namespace epitwin;
using namespace epitwin::dsl;

namespace {

ModelSpec load_spec(const std::string& rel)
{
    return parse(read_file(testsupport::fixture(rel)));
}

} // namespace

TEST_CASE("canonical SEIRM parses to five compartments and five flows")
{
    ModelSpec spec = load_spec("data/specs/seirm.nimm");
    CHECK(spec.name == "seirm");
    CHECK(spec.compartments == std::vector<std::string>{"S", "E", "I", "R", "M"});
    CHECK(spec.flows.size() == 5);
    CHECK(spec.init.size() == 5);
    CHECK(spec.observation != nullptr);
    CHECK(spec.foi_compartment() == "I");
}

TEST_CASE("missing flow target is a parse error with position and expectations")
{
    try {
        parse("model m { compartments S; flow S -> : beta * S; }");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::parse_error);
        std::string msg = e.what();
        CHECK(msg.find("line 1") != std::string::npos);
        CHECK(msg.find("expected one of") != std::string::npos);
        CHECK(msg.find("identifier") != std::string::npos);
        CHECK(msg.find("SOURCE") != std::string::npos);
    }
}

TEST_CASE("parser round-trip holds on 1000 sampled programs")
{
    Rng rng(321);
    for (int i = 0; i < 1000; ++i) {
        Rng sub = rng.stream(static_cast<std::uint64_t>(i));
        ModelSpec spec = sample_model(sub, SampleMode::grammar);
        std::string text = pretty(spec);
        ModelSpec reparsed = parse(text);
        INFO("program ", i, ":\n", text);
        CHECK(spec_equal(spec, reparsed));
        CHECK(pretty(reparsed) == text);
    }
}

TEST_CASE("canonical SEIRM verifies clean")
{
    auto report = verify(load_spec("data/specs/seirm.nimm"), VerifyConfig::defaults());
    CHECK(report.errors.empty());
    CHECK(report.warnings.empty());
}

TEST_CASE("dual-pathway fixture warns W1, unit-mismatch fixture warns W2")
{
    auto cfg = VerifyConfig::defaults();

    auto dual = verify(load_spec("data/specs/wrong_dual_pathway.nimm"), cfg);
    CHECK(dual.errors.empty());
    CHECK(dual.has("W1"));

    auto mismatch = verify(load_spec("data/specs/wrong_unit_mismatch.nimm"), cfg);
    CHECK(mismatch.errors.empty());
    CHECK(mismatch.has("W2"));
}

TEST_CASE("error rules E1-E4")
{
    auto cfg = VerifyConfig::defaults();

    auto e1 = verify(parse("model m { compartments S; flow S -> S : zeta * S; "
                           "init S = N; observe S; }"),
                     cfg);
    CHECK(e1.has("E1"));

    auto e2 = verify(parse("model m { compartments S, I; flow S -> I : S / N; "
                           "init S = N - 1; init I = 1; observe I; }"),
                     cfg);
    CHECK(e2.has("E2"));
    auto e2ok = verify(parse("model m { compartments S, I; flow S -> I : S / max(N, 1); "
                             "init S = N - 1; init I = 1; observe I; }"),
                       cfg);
    CHECK_FALSE(e2ok.has("E2"));

    auto e3 = verify(parse("model m { compartments S, I; flow S -> I : alpha * S; "
                           "init S = N; init I = 5; observe I; }"),
                     cfg);
    CHECK(e3.has("E3"));

    auto e4_missing = verify(parse("model m { compartments S; init S = N; }"), cfg);
    CHECK(e4_missing.has("E4"));
    auto e4_sink = verify(parse("model m { compartments S; init S = N; observe SINK; }"), cfg);
    CHECK(e4_sink.has("E4"));
}

TEST_CASE("role warnings W3 and sign warning W4")
{
    auto cfg = VerifyConfig::defaults();

    // beta outside foi()
    auto beta = verify(parse("model m { compartments S, I; flow S -> I : beta * S; "
                             "init S = N - 1; init I = 1; observe I; }"),
                       cfg);
    CHECK(beta.has("W3"));

    // gamma on a flow not leaving I
    auto gamma = verify(parse("model m { compartments S, E, I; flow S -> E : gamma * S; "
                              "flow E -> I : alpha * E; init S = N - 1; init E = 0; "
                              "init I = 1; observe I; }"),
                        cfg);
    CHECK(gamma.has("W3"));

    // mor into a compartment that has outflows
    auto mor = verify(parse("model m { compartments S, I, M; flow S -> I : alpha * S; "
                            "flow I -> M : mor * I; flow M -> S : delta * M; "
                            "init S = N - 1; init I = 1; init M = 0; observe I; }"),
                      cfg);
    CHECK(mor.has("W3"));
    // ... but mor into an absorbing compartment is its intended role
    auto mor_ok = verify(load_spec("data/specs/seirm.nimm"), cfg);
    CHECK_FALSE(mor_ok.has("W3"));

    auto w4 = verify(parse("model m { compartments S, E, I, R; flow S -> E : foi() * S - delta * R; "
                           "flow E -> I : alpha * E; init S = N - 1; init E = 0; init I = 1; "
                           "init R = 0; observe I; }"),
                     cfg);
    CHECK(w4.has("W4"));
}

TEST_CASE("conservation signature")
{
    auto closed = conservation_signature(load_spec("data/specs/seirm.nimm"));
    CHECK(closed.closed);
    CHECK(closed.source_terms.empty());
    CHECK(closed.sink_terms.empty());

    auto open = conservation_signature(
        parse("model m { compartments S, E, I; flow S -> E : foi() * S; "
              "flow SOURCE -> E : 0.001 * epsilon * N; flow I -> SINK : mor * I; "
              "flow E -> I : alpha * E; init S = N - 1; init E = 0; init I = 1; observe I; }"));
    CHECK_FALSE(open.closed);
    REQUIRE(open.source_terms.size() == 1);
    CHECK(open.source_terms[0].find("epsilon") != std::string::npos);
    REQUIRE(open.sink_terms.size() == 1);
    CHECK(open.sink_terms[0].find("mor") != std::string::npos);

    auto empty = conservation_signature(parse("model m { compartments S; init S = N; observe S; }"));
    CHECK(empty.closed);
}

TEST_CASE("verify is deterministic and serializes findings")
{
    auto spec = load_spec("data/specs/wrong_dual_pathway.nimm");
    auto cfg = VerifyConfig::defaults();
    auto a = verify(spec, cfg).to_json().dump();
    auto b = verify(spec, cfg).to_json().dump();
    CHECK(a == b);
    CHECK(a.find("\"code\"") != std::string::npos);
    CHECK(a.find("\"span\"") != std::string::npos);
}

TEST_CASE("verified samples are E-clean and simulate ten steps without aborting")
{
    Rng rng(99);
    auto cfg = VerifyConfig::defaults();
    int clean = 0;
    for (int i = 0; i < 300; ++i) {
        Rng sub = rng.stream(static_cast<std::uint64_t>(i));
        ModelSpec spec = sample_model(sub, SampleMode::verified);
        auto report = verify(spec, cfg);
        INFO("sample ", i, ":\n", pretty(spec));
        REQUIRE(report.errors.empty());
        ++clean;

        auto ctx = sim::MetapopContext::mixing({1000.0, 2000.0}, 0.1);
        auto params = sim::ParamField::constant(2, 10, {0.3, 0.2, 0.1, 0.05, 0.15, 0.1, 0.5, 0.02});
        auto traj = sim::simulate(spec, ctx, params, 10);
        CHECK(traj.yhat.shape()[0] == 10);
    }
    CHECK(clean == 300);
}

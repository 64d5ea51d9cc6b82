#pragma once

#include "epitwin/dsl/ast.hpp"

#include <json.hpp>

#include <array>
#include <map>
#include <string>
#include <vector>

namespace epitwin::dsl {

struct Bounds {
    double lo = 0.0;
    double hi = 1.0;
};

/// Where a parameter channel may legitimately appear.
///   any        - unrestricted
///   foi_only   - consumed implicitly by foi(); explicit use is flagged
///   outflow_of - only in rates of flows leaving `compartment`
///   into_sink  - only in rates of flows into SINK or into an absorbing
///                compartment (one with no outgoing flows)
struct Role {
    enum class Kind { any, foi_only, outflow_of, into_sink };
    Kind kind = Kind::any;
    std::string compartment;
};

struct VerifyConfig {
    double guard_epsilon = 1e-8;
    /// Population used to evaluate init expressions for the mass check.
    double reference_population = 1e6;
    std::array<Bounds, 8> bounds{}; // per channel, default [0,1]
    std::map<std::string, Role> roles;

    static VerifyConfig defaults();
};

struct Finding {
    std::string code; // E1..E4, W1..W4
    std::string msg;
    Span span;
};

struct VerifyReport {
    std::vector<Finding> errors;
    std::vector<Finding> warnings;

    bool accepted() const { return errors.empty(); }
    bool has(std::string_view code) const;
    nlohmann::ordered_json to_json() const;
};

/// Deterministic rule evaluation; pure function of (spec, config).
///
/// Errors:   E1 undeclared/ill-placed identifier
///           E2 unguarded division
///           E3 init masses negative or not summing to the population
///           E4 observation missing or referencing SOURCE/SINK
/// Warnings: W1 duplicate parallel flows
///           W2 parameter injected as an additive standalone flow term
///           W3 parameter outside its configured role
///           W4 rate not provably nonnegative under bounds
VerifyReport verify(const ModelSpec& spec, const VerifyConfig& cfg);

struct ConservationSignature {
    bool closed = true;
    std::vector<std::string> source_terms;
    std::vector<std::string> sink_terms;
};

/// closed == true iff every flow is compartment-to-compartment, in
/// which case simulation keeps per-patch total mass invariant (up to
/// clamping, which the simulator accounts separately).
ConservationSignature conservation_signature(const ModelSpec& spec);

} // namespace epitwin::dsl

#pragma once

#include "epitwin/dsl/ast.hpp"
#include "epitwin/util/rng.hpp"

namespace epitwin::dsl {

/// grammar:  exercises the full surface syntax; output is parseable
///           but makes no semantic promises (round-trip testing).
/// verified: output passes the verifier with zero E-level findings and
///           uses bounded mass-action rates, so short simulations stay
///           finite (interpreter fuzzing).
enum class SampleMode { grammar, verified };

ModelSpec sample_model(Rng& rng, SampleMode mode);

/// A rate for a flow out of `from` that is nonnegative under default
/// bounds and moves at most `budget` * FROM mass per step (foi-scaled
/// terms excepted). Shared with the mutation generator's edits.
ExprPtr sample_safe_rate(Rng& rng, const std::vector<std::string>& compartments,
                         const std::string& from, double budget);

/// Nonnegative importation rate for a SOURCE -> c flow.
ExprPtr sample_import_rate(Rng& rng);

} // namespace epitwin::dsl

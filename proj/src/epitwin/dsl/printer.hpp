#pragma once

#include "epitwin/dsl/ast.hpp"

#include <string>

namespace epitwin::dsl {

/// Canonical text form; parse(pretty(spec)) is structurally equal to
/// spec. Also the normalization used for candidate deduplication.
std::string pretty(const ModelSpec& spec);
std::string pretty(const ExprPtr& expr);

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

} // namespace epitwin::dsl

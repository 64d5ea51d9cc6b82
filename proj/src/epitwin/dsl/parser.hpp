#pragma once

#include "epitwin/dsl/ast.hpp"

#include <string_view>

namespace epitwin::dsl {

/// Parse DSL source into a ModelSpec. Throws Error(PARSE_ERROR) with
/// line, column and the expected-token set; those messages are what
/// the agent loop stores in its error memory.
ModelSpec parse(std::string_view text);

/// Candidate form: a model block optionally followed by
/// `config { key = value; ... }` carrying calibration hyperparameters.
struct ModelAndConfig {
    ModelSpec spec;
    std::vector<std::pair<std::string, std::string>> config;
};
ModelAndConfig parse_with_config(std::string_view text);

} // namespace epitwin::dsl

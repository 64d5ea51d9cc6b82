#pragma once

#include <stdexcept>
#include <string>

namespace epitwin {

/// Failure classes surfaced by the engine. Candidate-level failures
/// (parse, divergence, generator, format) are contained by the evolve
/// loop; the rest indicate caller contract violations or bad inputs.
enum class Errc {
    shape_error,
    numeric_guard_error,
    contract_error,
    optimizer_divergence,
    parse_error,
    ingest_error,
    sim_divergence,
    generator_error,
    format_error,
    config_error,
    io_error,
};

inline const char* errc_name(Errc c)
{
    switch (c) {
    case Errc::shape_error:           return "SHAPE_ERROR";
    case Errc::numeric_guard_error:   return "NUMERIC_GUARD_ERROR";
    case Errc::contract_error:        return "CONTRACT_ERROR";
    case Errc::optimizer_divergence:  return "OPTIMIZER_DIVERGENCE";
    case Errc::parse_error:           return "PARSE_ERROR";
    case Errc::ingest_error:          return "INGEST_ERROR";
    case Errc::sim_divergence:        return "SIM_DIVERGENCE";
    case Errc::generator_error:       return "GENERATOR_ERROR";
    case Errc::format_error:          return "FORMAT_ERROR";
    case Errc::config_error:          return "CONFIG_ERROR";
    case Errc::io_error:              return "IO_ERROR";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code)
    {
    }

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg)
{
    throw Error(code, msg);
}

inline void require(bool cond, Errc code, const std::string& msg)
{
    if (!cond)
        raise(code, msg);
}

} // namespace epitwin

#pragma once

#include <string>

namespace epitwin {

/// Minimal stderr logger. Warnings are also counted so tests can
/// assert that degraded paths (endpoint fallback etc.) were flagged.
namespace log {

void warn(const std::string& msg);
void info(const std::string& msg);
long warn_count();
void set_quiet(bool quiet);

} // namespace log
} // namespace epitwin

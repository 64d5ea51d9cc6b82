#pragma once

#include <filesystem>
#include <string>

namespace epitwin {

std::string read_file(const std::filesystem::path& path);

/// Write via temp-file-and-rename so artifacts are either fully
/// written or absent, never truncated.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

} // namespace epitwin

#pragma once

#include <filesystem>
#include <string>

namespace epitwin::testsupport {

inline std::filesystem::path source_root()
{
    return std::filesystem::path(EPITWIN_SOURCE_DIR);
}

inline std::string fixture(const std::string& rel)
{
    return (source_root() / rel).string();
}

} // namespace epitwin::testsupport

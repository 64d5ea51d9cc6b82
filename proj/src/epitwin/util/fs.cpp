#include "epitwin/util/fs.hpp"
#include "epitwin/util/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace epitwin {

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Errc::io_error, "cannot open " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void atomic_write_file(const std::filesystem::path& path, const std::string& content)
{
    namespace fs = std::filesystem;
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), Errc::io_error, "cannot open " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        require(out.good(), Errc::io_error, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        raise(Errc::io_error, "rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
    }
}

} // namespace epitwin

#include "epitwin/util/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace epitwin::log {

namespace {
std::atomic<long> g_warns{0};
std::atomic<bool> g_quiet{false};
std::mutex g_mutex;
} // namespace

void warn(const std::string& msg)
{
    g_warns.fetch_add(1, std::memory_order_relaxed);
    if (g_quiet.load(std::memory_order_relaxed))
        return;
    std::scoped_lock lock(g_mutex);
    std::fprintf(stderr, "[warn] %s\n", msg.c_str());
}

void info(const std::string& msg)
{
    if (g_quiet.load(std::memory_order_relaxed))
        return;
    std::scoped_lock lock(g_mutex);
    std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

long warn_count()
{
    return g_warns.load(std::memory_order_relaxed);
}

void set_quiet(bool quiet)
{
    g_quiet.store(quiet, std::memory_order_relaxed);
}

} // namespace epitwin::log

#include "kbvqa/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace kbvqa::log {

namespace {
std::atomic<bool> g_quiet{false};
std::atomic<long> g_warnings{0};
std::mutex g_mutex;
}  // namespace

void warn(const std::string& msg) {
    ++g_warnings;
    if (g_quiet.load()) return;
    std::lock_guard<std::mutex> lock(g_mutex);
    std::cerr << "[kbvqa] warning: " << msg << "\n";
}

void info(const std::string& msg) {
    if (g_quiet.load()) return;
    std::lock_guard<std::mutex> lock(g_mutex);
    std::cerr << "[kbvqa] " << msg << "\n";
}

void set_quiet(bool quiet) { g_quiet.store(quiet); }

long warning_count() { return g_warnings.load(); }

}  // namespace kbvqa::log

#include "wfse/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace wfse {

namespace {
std::atomic<LogLevel> g_level{LogLevel::Info};
std::mutex g_mutex;

void emit(const char* tag, const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_mutex);
    std::cerr << tag << msg << '\n';
}
} // namespace

void set_log_level(LogLevel level) { g_level.store(level); }
LogLevel log_level() { return g_level.load(); }

void log_debug(const std::string& msg) {
    if (g_level.load() <= LogLevel::Debug) emit("[debug] ", msg);
}

void log_info(const std::string& msg) {
    if (g_level.load() <= LogLevel::Info) emit("[info] ", msg);
}

void log_warn(const std::string& msg) {
    if (g_level.load() <= LogLevel::Warn) emit("[warn] ", msg);
}

} // namespace wfse

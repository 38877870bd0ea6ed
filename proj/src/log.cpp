#include "fedgrid/log.hpp"

#include <cstdlib>
#include <iostream>

namespace fedgrid {

namespace {
LogLevel g_level = LogLevel::Info;
}

void set_log_level(LogLevel level) { g_level = level; }

LogLevel log_level_from_env() {
    const char* env = std::getenv("FEDGRID_LOG");
    if (!env) return LogLevel::Info;
    std::string v(env);
    if (v == "quiet") return LogLevel::Quiet;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}

void log_info(const std::string& msg) {
    if (g_level >= LogLevel::Info) std::cerr << "[fedgrid] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (g_level >= LogLevel::Debug) std::cerr << "[fedgrid] " << msg << "\n";
}

}  // namespace fedgrid

#pragma once

#include <string>

namespace fedgrid {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

// Initial level comes from FEDGRID_LOG (quiet|info|debug); --quiet lowers it.
void set_log_level(LogLevel level);
LogLevel log_level_from_env();

void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace fedgrid

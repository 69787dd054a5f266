#pragma once

#include <string>

namespace rectflow {

// Verbosity is controlled by the RECTFLOW_LOG environment variable:
// error | warn | info (default) | debug.
enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level();

void log_error(const std::string& msg);
void log_warn(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace rectflow

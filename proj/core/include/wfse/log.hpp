#ifndef WFSE_LOG_HPP
#define WFSE_LOG_HPP

#include <string>

namespace wfse {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Silent = 3 };

// All diagnostics go to stderr so stdout stays clean for piped CSV/JSON.
void set_log_level(LogLevel level);
LogLevel log_level();

void log_debug(const std::string& msg);
void log_info(const std::string& msg);
void log_warn(const std::string& msg);

} // namespace wfse

#endif

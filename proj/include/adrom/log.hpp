#pragma once

#include <functional>
#include <string>

namespace adrom {

enum class LogLevel { info, warning };

using LogSink = std::function<void(LogLevel, const std::string &)>;

/// Replaces the process-wide sink (default: stderr). Returns the old one.
LogSink set_log_sink(LogSink sink);
void log(LogLevel level, const std::string &msg);
inline void log_warning(const std::string &msg) { log(LogLevel::warning, msg); }
inline void log_info(const std::string &msg) { log(LogLevel::info, msg); }

} // namespace adrom

#include "adrom/log.hpp"

#include <iostream>
#include <mutex>

namespace adrom {
namespace {

std::mutex &sink_mutex() {
  static std::mutex m;
  return m;
}

LogSink &sink() {
  static LogSink s = [](LogLevel level, const std::string &msg) {
    std::cerr << (level == LogLevel::warning ? "warning: " : "") << msg << '\n';
  };
  return s;
}

} // namespace

LogSink set_log_sink(LogSink s) {
  std::lock_guard lock(sink_mutex());
  std::swap(sink(), s);
  return s;
}

void log(LogLevel level, const std::string &msg) {
  std::lock_guard lock(sink_mutex());
  if (sink())
    sink()(level, msg);
}

} // namespace adrom

#include "ctm/log.hpp"

#include <fstream>
#include <mutex>

namespace ctm::log {

namespace {
std::mutex mu;
std::ofstream sink;
}  // namespace

void set_log_file(const std::string& path) {
  std::lock_guard<std::mutex> lock(mu);
  sink.open(path, std::ios::app);
}

void close_log() {
  std::lock_guard<std::mutex> lock(mu);
  if (sink.is_open()) sink.close();
}

void emit(const std::string& json_line) {
  std::lock_guard<std::mutex> lock(mu);
  if (sink.is_open()) sink << json_line << "\n" << std::flush;
}

bool enabled() {
  std::lock_guard<std::mutex> lock(mu);
  return sink.is_open();
}

}  // namespace ctm::log

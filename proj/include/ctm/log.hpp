#pragma once

#include <string>

namespace ctm::log {

// JSON-lines run log. Disabled unless a sink is set; safe from multiple
// threads.
void set_log_file(const std::string& path);
void close_log();
void emit(const std::string& json_line);
bool enabled();

}  // namespace ctm::log

#pragma once

#include <string>

namespace kbvqa::log {

// Minimal stderr logger. Warnings are counted so tests can assert that a
// degraded path (skipped record, corrupt cache entry, ...) was logged.
void warn(const std::string& msg);
void info(const std::string& msg);

void set_quiet(bool quiet);
long warning_count();

}  // namespace kbvqa::log

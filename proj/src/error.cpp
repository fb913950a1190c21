#include "replan/error.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace replan {

namespace {
std::atomic<bool> g_warnings{true};
std::mutex g_warn_mu;
}  // namespace

void warn(std::string_view message) {
  if (!g_warnings.load()) return;
  std::lock_guard lock(g_warn_mu);
  std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled); }

}  // namespace replan

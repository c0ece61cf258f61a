#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace rlgnn::log {

inline std::atomic<bool>& quiet_flag() {
  static std::atomic<bool> quiet{false};
  return quiet;
}

inline void set_quiet(bool q) { quiet_flag() = q; }

inline void warn(std::string_view msg) {
  if (quiet_flag()) return;
  static std::mutex m;
  std::lock_guard lock(m);
  std::cerr << "warning: " << msg << '\n';
}

}  // namespace rlgnn::log

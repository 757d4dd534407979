#include "ragen/diagnostics.hpp"

#include <iostream>

namespace ragen {

Diagnostics& Diagnostics::instance() {
  static Diagnostics d;
  return d;
}

void Diagnostics::warn(std::string scope, std::string message) {
  std::lock_guard lock(mutex_);
  if (verbose_) std::cerr << "[warn] " << scope << ": " << message << '\n';
  warnings_.push_back({std::move(scope), std::move(message)});
}

void Diagnostics::info(const std::string& scope, const std::string& message) const {
  std::lock_guard lock(mutex_);
  if (verbose_) std::cerr << "[info] " << scope << ": " << message << '\n';
}

std::vector<Warning> Diagnostics::drain() {
  std::lock_guard lock(mutex_);
  return std::exchange(warnings_, {});
}

std::vector<Warning> Diagnostics::snapshot() const {
  std::lock_guard lock(mutex_);
  return warnings_;
}

void Diagnostics::set_verbose(bool verbose) {
  std::lock_guard lock(mutex_);
  verbose_ = verbose;
}

bool Diagnostics::verbose() const {
  std::lock_guard lock(mutex_);
  return verbose_;
}

}  // namespace ragen

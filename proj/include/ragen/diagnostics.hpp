#pragma once

#include <mutex>
#include <string>
#include <vector>

namespace ragen {

struct Warning {
  std::string scope;
  std::string message;
};

/// Process-wide warning sink. Every warning is kept so the run manifest can
/// list it; printing to stderr is controlled by `set_verbose`.
class Diagnostics {
 public:
  static Diagnostics& instance();

  void warn(std::string scope, std::string message);
  void info(const std::string& scope, const std::string& message) const;

  std::vector<Warning> drain();
  std::vector<Warning> snapshot() const;

  void set_verbose(bool verbose);
  bool verbose() const;

 private:
  Diagnostics() = default;
  mutable std::mutex mutex_;
  std::vector<Warning> warnings_;
  bool verbose_ = false;
};

inline void warn(std::string scope, std::string message) {
  Diagnostics::instance().warn(std::move(scope), std::move(message));
}

}  // namespace ragen

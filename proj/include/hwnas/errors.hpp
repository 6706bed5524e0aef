#pragma once

#include <stdexcept>
#include <string>

namespace hwnas {

// User-facing errors (bad config, bad path, bad CLI argument). The CLI maps
// these to exit code 1; anything else escaping to main is exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// A training run that diverged (non-finite loss). The search loop scores the
// trial with worst-case objectives instead of crashing.
class FailedTrial : public std::runtime_error {
 public:
  explicit FailedTrial(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hwnas

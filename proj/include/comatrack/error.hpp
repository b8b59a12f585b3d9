#pragma once

#include <stdexcept>
#include <string>

namespace comatrack {

// Invalid configuration value or schema violation. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse: acting on a terminated state, missing agent, empty input...
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Bad input data (non-finite observation, malformed file).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint / dataset version or shape mismatch.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Divergence or non-finite values during optimization. CLI exit code 3.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arena construction failures name the offending element.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
 public:
  GenerationError(std::size_t episode_id, const std::string& what)
      : std::runtime_error("episode " + std::to_string(episode_id) + ": " + what),
        episode_id_(episode_id) {}
  std::size_t episode_id() const noexcept { return episode_id_; }

 private:
  std::size_t episode_id_;
};

}  // namespace comatrack

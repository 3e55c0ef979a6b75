#pragma once

#include <stdexcept>
#include <string>

namespace ereem {

// Solver failures: fit non-convergence, unitarity loss, labeling ambiguity.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or schema-violating run configuration. `pointer` is a JSON pointer
// to the offending field when one exists.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& pointer, const std::string& message)
      : std::runtime_error(pointer.empty() ? message : pointer + ": " + message),
        pointer_(pointer) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ereem

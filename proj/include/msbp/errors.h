#pragma once

#include <stdexcept>
#include <string>

namespace msbp {

// Bad configuration or hyperparameters supplied by the caller.
class Config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data could not be read or validated.  `line` is 1-based, 0 when not tied to a line.
class Ingestion_error : public std::runtime_error {
 public:
  Ingestion_error(const std::string& what, int line = 0)
      : std::runtime_error{line > 0 ? what + " (line " + std::to_string(line) + ")" : what},
        line_{line} {}
  auto line() const -> int { return line_; }

 private:
  int line_;
};

// A sampler produced a non-finite quantity or could not make progress.
class Numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace msbp

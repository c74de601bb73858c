#pragma once

#include <stdexcept>
#include <string>

namespace pcvmtl {

/// Bad input: malformed files, violated preconditions, invalid configuration.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical stage could not produce a usable result (degenerate spectrum,
/// non-finite values). `stage()` names the step that failed.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace pcvmtl

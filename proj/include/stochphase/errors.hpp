#pragma once

#include <stdexcept>
#include <string>

namespace stochphase {

/// Broad failure classes. The CLI maps these onto exit codes.
enum class ErrorKind {
  Config,        // bad input or configuration
  Numerical,     // a computation failed or produced an invalid result
  Underpowered,  // insufficient data, or a refusal to compute
};

/// Exception carrying a stable machine-readable code (e.g. "hole", "stiffness").
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

inline Error config_error(const std::string& code, const std::string& msg) {
  return Error(ErrorKind::Config, code, msg);
}
inline Error numerical_error(const std::string& code, const std::string& msg) {
  return Error(ErrorKind::Numerical, code, msg);
}
inline Error underpowered_error(const std::string& code, const std::string& msg) {
  return Error(ErrorKind::Underpowered, code, msg);
}

}  // namespace stochphase

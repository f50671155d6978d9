#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edmq {

enum class ErrorKind {
  invalid_argument,
  invalid_grid,
  unsupported_distribution,
  absolute_continuity,
  inconsistent_rule,
  domain,
  division,
  requires_kt,
  oracle_too_large,
  malformed_file,
  incompatible_grid,
  unsupported,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_grid: return "invalid-grid";
    case ErrorKind::unsupported_distribution: return "unsupported-distribution";
    case ErrorKind::absolute_continuity: return "absolute-continuity";
    case ErrorKind::inconsistent_rule: return "inconsistent-rule";
    case ErrorKind::domain: return "domain";
    case ErrorKind::division: return "division";
    case ErrorKind::requires_kt: return "requires-kt";
    case ErrorKind::oracle_too_large: return "oracle-too-large";
    case ErrorKind::malformed_file: return "malformed-file";
    case ErrorKind::incompatible_grid: return "incompatible-grid";
    case ErrorKind::unsupported: return "unsupported";
  }
  return "unknown";
}

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace edmq

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vrld {

enum class ErrorKind {
  InvalidArgument,
  Contract,    // caller broke a documented precondition (bad index set, ...)
  Numerical,   // non-finite value where a finite one is required
  Config,      // configuration file / experiment setup problem
  Hypothesis,  // a hypothesis needed by a formula does not hold
  Diverged,    // sampler produced a non-finite iterate
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace vrld

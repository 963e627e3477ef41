#include "vrld/error.hpp"

namespace vrld {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Contract: return "contract_violation";
    case ErrorKind::Numerical: return "numerical_domain";
    case ErrorKind::Config: return "config";
    case ErrorKind::Hypothesis: return "hypothesis_violation";
    case ErrorKind::Diverged: return "diverged";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace vrld

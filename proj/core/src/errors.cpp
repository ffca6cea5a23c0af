#include "hypermass/errors.hpp"

namespace hypermass {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::degenerate_metric: return "degenerate-metric";
    case ErrorKind::range: return "range";
    case ErrorKind::boundary: return "boundary";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::hypothesis: return "hypothesis-violation";
    case ErrorKind::solver: return "solver";
    case ErrorKind::construction: return "construction";
    case ErrorKind::contract: return "contract-violation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace hypermass

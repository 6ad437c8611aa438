#include "qmeas/errors.hpp"

namespace qmeas {

std::string_view error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::Resource: return "ResourceError";
    case ErrorKind::Convergence: return "ConvergenceError";
    case ErrorKind::GridTooSmall: return "GridTooSmallError";
    case ErrorKind::Accuracy: return "AccuracyError";
    case ErrorKind::Internal: return "InternalError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Schema: return "SchemaError";
  }
  return "UnknownError";
}

}  // namespace qmeas

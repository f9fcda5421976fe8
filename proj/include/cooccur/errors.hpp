#pragma once

#include <stdexcept>
#include <string>

namespace cooccur {

// Error taxonomy shared by the library and the CLI. The CLI prints
// "error:<category>: <message>" on stderr and exits nonzero.
enum class ErrorCategory {
  Config,
  InputShape,
  Ingestion,
  Format,
  Sampling,
  Bounds,
  MissingLabel,
  UndefinedMetric,
  Protocol,
  DegenerateGraph,
  Input,
  Internal,
};

inline const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::InputShape: return "input-shape";
    case ErrorCategory::Ingestion: return "ingestion";
    case ErrorCategory::Format: return "format";
    case ErrorCategory::Sampling: return "sampling";
    case ErrorCategory::Bounds: return "bounds";
    case ErrorCategory::MissingLabel: return "missing-label";
    case ErrorCategory::UndefinedMetric: return "undefined-metric";
    case ErrorCategory::Protocol: return "protocol";
    case ErrorCategory::DegenerateGraph: return "degenerate-graph";
    case ErrorCategory::Input: return "input";
    case ErrorCategory::Internal: return "internal";
  }
  return "internal";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory cat, const std::string& msg)
      : std::runtime_error(msg), cat_(cat) {}
  ErrorCategory category() const { return cat_; }

 private:
  ErrorCategory cat_;
};

[[noreturn]] inline void fail(ErrorCategory cat, const std::string& msg) {
  throw Error(cat, msg);
}

}  // namespace cooccur

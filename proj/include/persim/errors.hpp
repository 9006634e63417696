#pragma once

#include <stdexcept>
#include <string>

namespace persim {

/// Raised for problems the caller can fix: malformed input files, unknown
/// identifiers, inconsistent configuration. Distinct from runtime failures
/// (I/O, network) so the CLI can map them to different exit codes.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace persim

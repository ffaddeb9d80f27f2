// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace frr {

/// Base class of every error raised by the library. `kind()` is a stable
/// snake_case tag the CLI prints on its machine-parsable error line.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

#define FRR_DEFINE_ERROR(Name, Tag)                          \
  class Name : public Error {                                \
   public:                                                   \
    using Error::Error;                                      \
    const char* kind() const noexcept override { return Tag; } \
  }

FRR_DEFINE_ERROR(ShapeError, "shape_error");
FRR_DEFINE_ERROR(InvalidArgument, "invalid_argument");
FRR_DEFINE_ERROR(ConfigError, "config_error");
FRR_DEFINE_ERROR(ContractViolation, "contract_violation");
FRR_DEFINE_ERROR(NumericError, "non_finite");
FRR_DEFINE_ERROR(IoError, "io_error");
FRR_DEFINE_ERROR(ChecksumError, "checksum_mismatch");
FRR_DEFINE_ERROR(CheckpointError, "incompatible_checkpoint");

#undef FRR_DEFINE_ERROR

template <class E = InvalidArgument>
inline void require(bool condition, const std::string& message) {
  if (!condition) throw E(message);
}

}  // namespace frr

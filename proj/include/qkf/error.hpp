// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace qkf {

/// Error categories double as CLI exit codes.
enum class ErrorKind : int {
  kInvalidArgument = 2,
  kParse = 3,
  kSchema = 4,
  kCapacity = 5,
  kDimension = 6,
  kNumeric = 7,
  kMissingArtifact = 8,
  kConvergence = 9,
  kIo = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace qkf

#pragma once

#include <iosfwd>

#include "reflectix/error.hpp"

// The `reflectix` command line: inspect and validate GVG1 blobs, run the
// expression passes, round-trip values through the serializer.
namespace reflectix::cli {

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kMalformedBytes = 2,
  kIncompatible = 3,
  kUnknownType = 4,
  kParseError = 5,
  kRepresentationRejected = 6,
  kUnknownConstructor = 7,
  kNoDescriptor = 8,
  kFuelExhausted = 9,
  kCyclicValue = 10,
  kDepthExceeded = 11,
  kRoundtripMismatch = 12,
  kOtherError = 13,  // any remaining library error
  kUsage = 14,       // bad flags, unknown pass, bad REFLECTIX_FUEL
};

int exit_code_for(ErrorKind kind) noexcept;

// argv[0] is the program name. Results go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace reflectix::cli

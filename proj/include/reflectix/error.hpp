#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace reflectix {

enum class ErrorKind {
  NotSupported,
  DuplicateDescriptor,
  ArityMismatch,
  IndexOutOfRange,
  MalformedValue,
  UnknownConstructor,
  DuplicateConstructor,
  NoRepresentation,
  NoView,
  NoMatchingConstructor,
  BrandMismatch,
  FuelExhausted,
  MalformedBytes,
  Incompatible,
  RepresentationRejected,
  NoDescriptor,
  CyclicValue,
  DepthExceeded,
  UnknownType,
  ParseError,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library is an Error; kind() is the stable
// discriminator, what() carries a human-readable rendering.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class MalformedBytes : public Error {
 public:
  MalformedBytes(std::size_t offset, const std::string& reason)
      : Error(ErrorKind::MalformedBytes, reason + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// The compatibility check failed: the node at `path` does not fit `expected`.
class Incompatible : public Error {
 public:
  Incompatible(std::string path, std::string expected, std::string found)
      : Error(ErrorKind::Incompatible,
              "at " + path + ": expected " + expected + ", found " + found),
        path_(std::move(path)),
        expected_(std::move(expected)),
        found_(std::move(found)) {}

  const std::string& path() const noexcept { return path_; }
  const std::string& expected() const noexcept { return expected_; }
  const std::string& found() const noexcept { return found_; }

 private:
  std::string path_;
  std::string expected_;
  std::string found_;
};

class RepresentationRejected : public Error {
 public:
  RepresentationRejected(std::string path, const std::string& type)
      : Error(ErrorKind::RepresentationRejected,
              "at " + path + ": representation is not a valid " + type),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& reason)
      : Error(ErrorKind::ParseError,
              std::to_string(line) + ":" + std::to_string(column) + ": " + reason),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace reflectix

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace relct {

struct SourceLoc {
  uint32_t line = 0;
  uint32_t column = 0;

  std::string str() const {
    return std::to_string(line) + ":" + std::to_string(column);
  }
  bool operator==(const SourceLoc&) const = default;
};

// Base class of every error raised by the library. `kind()` is a stable
// tag used by the CLI and the tests.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

class LocatedError : public Error {
public:
  LocatedError(std::string kind, SourceLoc loc, const std::string& msg)
      : Error(std::move(kind), loc.str() + ": " + msg), loc_(loc) {}

  SourceLoc loc() const { return loc_; }

private:
  SourceLoc loc_;
};

class SyntaxError : public LocatedError {
public:
  SyntaxError(SourceLoc loc, const std::string& msg)
      : LocatedError("SyntaxError", loc, msg) {}
};

class ValidationError : public LocatedError {
public:
  ValidationError(SourceLoc loc, const std::string& msg)
      : LocatedError("ValidationError", loc, msg) {}
};

class PolicyError : public LocatedError {
public:
  PolicyError(SourceLoc loc, const std::string& msg)
      : LocatedError("PolicyError", loc, msg) {}
};

class EntryError : public Error {
public:
  // kind is one of MissingEntry, UnknownFunction, ArityMismatch.
  EntryError(std::string kind, const std::string& msg)
      : Error(std::move(kind), msg) {}
};

class WidthMismatch : public Error {
public:
  explicit WidthMismatch(const std::string& msg)
      : Error("WidthMismatch", msg) {}
};

class MalformedModel : public Error {
public:
  explicit MalformedModel(const std::string& msg)
      : Error("MalformedModel", msg) {}
};

} // namespace relct

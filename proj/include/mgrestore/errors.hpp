#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mgrestore {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed feeder/config/checkpoint document.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A document names a bus, line or breaker that does not exist.
class ReferenceError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(summarize(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string summarize(const std::vector<std::string>& v) {
    std::string msg = "invalid feeder:";
    for (const auto& s : v) msg += " " + s + ";";
    if (!v.empty()) msg.pop_back();
    return msg;
  }

  std::vector<std::string> violations_;
};

class UnknownFeederError : public Error {
 public:
  explicit UnknownFeederError(const std::string& name)
      : Error("unknown feeder '" + name + "'") {}
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Raised when the caller breaks an operation's precondition, e.g. stepping an
// exhausted episode or applying an invalid joint action under masking.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace mgrestore

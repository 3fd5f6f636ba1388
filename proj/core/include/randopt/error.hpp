#pragma once

#include <stdexcept>
#include <string>

namespace randopt {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or mismatched dimensions.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Instance exceeds the size an exact routine is configured to handle.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Node or flip budget exhausted before a verdict was reached.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// Too few samples for the requested statistic.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// PDE grid cannot support the requested order parameter.
class GridError : public Error {
 public:
  using Error::Error;
};

enum class ParseErrorKind { kCorruptHeader, kVersionMismatch, kTypeMismatch, kTruncated, kMalformed };

class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  ParseErrorKind kind() const noexcept { return kind_; }

 private:
  ParseErrorKind kind_;
};

}  // namespace randopt

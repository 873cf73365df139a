#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dpstat {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Distance requested for a pair of distributions with no supported closed form.
class UnsupportedPairError : public Error {
 public:
  using Error::Error;
};

// Brute-force oracle invoked beyond its enumeration limits.
class TooLargeError : public Error {
 public:
  using Error::Error;
};

class BetaNegativeError : public Error {
 public:
  using Error::Error;
};

// beta(alpha, delta) requested while delta == 0.
class DeltaZeroError : public Error {
 public:
  using Error::Error;
};

class EtaOutOfRangeError : public Error {
 public:
  using Error::Error;
};

class AlphaOutOfRangeError : public Error {
 public:
  using Error::Error;
};

class NoSignChangeError : public Error {
 public:
  using Error::Error;
};

class NonDifferentiableError : public Error {
 public:
  using Error::Error;
};

class DegenerateDerivativeError : public Error {
 public:
  using Error::Error;
};

class UnboundedError : public Error {
 public:
  using Error::Error;
};

class EpsTooLargeError : public Error {
 public:
  using Error::Error;
};

class GridTooCoarseError : public Error {
 public:
  using Error::Error;
};

class NotNeighborsError : public Error {
 public:
  using Error::Error;
};

// Config file syntax error; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("parse error at line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that fails semantic validation; carries the field name.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace dpstat

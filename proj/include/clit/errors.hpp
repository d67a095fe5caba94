#pragma once

#include <stdexcept>
#include <string>

namespace clit {

// Base for every error raised by the library. The CLI maps the subclasses
// onto exit codes (see tools/clit_main.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class IllConditionedError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_deviance)
      : Error(what), last_deviance_(last_deviance) {}
  double last_deviance() const { return last_deviance_; }

 private:
  double last_deviance_;
};

// V(1) <= 0: the normalised statistics are undefined.
class DegenerateVarianceError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line) : Error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace clit

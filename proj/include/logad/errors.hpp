#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace logad {

/// Root of every error raised by the pipeline. The CLI maps these to exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed syslog line. `line_number` is 1-based, or 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line_number = 0)
      : Error(line_number == 0 ? what : "line " + std::to_string(line_number) + ": " + what),
        line_number_(line_number) {}
  std::size_t line_number() const noexcept { return line_number_; }

 private:
  std::size_t line_number_;
};

class CorpusError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EmptySeriesError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ThresholdError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(std::size_t epoch)
      : Error("training diverged (non-finite loss) at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace logad

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dsner {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, invalid configuration values.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A checkpoint that cannot be read or does not match the data it is used on.
class ArtifactMismatch : public Error {
 public:
  using Error::Error;
};

// Non-finite loss during training.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t batch, const std::string& what)
      : Error("batch " + std::to_string(batch) + ": " + what), batch_(batch) {}
  std::size_t batch() const { return batch_; }

 private:
  std::size_t batch_;
};

}  // namespace dsner

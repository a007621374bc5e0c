#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad arguments: dimension mismatch, nonpositive step, unknown name, ...
struct UsageError : Error {
  using Error::Error;
};

// A component oracle produced a NaN or infinite entry.
struct NumericError : Error {
  NumericError(std::size_t component, const std::string &what)
      : Error(what), component(component) {}
  std::size_t component;
};

struct DomainSamplingError : Error {
  using Error::Error;
};

struct ExhaustedScheduleError : Error {
  using Error::Error;
};

struct PreconditionError : Error {
  using Error::Error;
};

// Iterate left the finite range or exceeded the divergence threshold.
struct DivergenceError : Error {
  DivergenceError(std::size_t epoch, const std::string &what)
      : Error(what), epoch(epoch) {}
  std::size_t epoch;
};

struct UnsupportedCheckError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(std::size_t line, const std::string &what)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

} // namespace prr

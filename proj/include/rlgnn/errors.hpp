#pragma once

#include <stdexcept>
#include <string>

namespace rlgnn {

// Base for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file. `line` is 1-based, 0 when not line-specific.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line(line) {}
  std::size_t line;
};

// Invalid parameters passed to an operation (e.g. n*d odd).
struct ParameterError : Error {
  using Error::Error;
};

// Caller violated an operation's precondition (size mismatch and friends).
struct ContractError : Error {
  using Error::Error;
};

// Modularity on a graph without edges.
struct DegenerateGraphError : Error {
  using Error::Error;
};

// Non-finite value encountered during training.
struct NumericError : Error {
  using Error::Error;
};

// Exact solver refused an input that is too large.
struct SizeGuardError : Error {
  using Error::Error;
};

// A pipeline stage failed; `stage` names it.
struct StageError : Error {
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage(std::move(stage)) {}
  std::string stage;
};

}  // namespace rlgnn

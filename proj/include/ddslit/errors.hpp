#pragma once

#include <stdexcept>
#include <string>

namespace ddslit {

/// Invalid user-supplied parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// |Psi| has cancelled to below the node floor; the velocity field is undefined there.
class NodeSingularity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Conditioning point lies where every term of the state vanishes.
class DegenerateCollapse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejection sampler saw an acceptance ratio above one.
class EnvelopeViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Adaptive step size fell below dt_min.
class StiffnessError : public std::runtime_error {
 public:
  StiffnessError(const std::string& what, double t) : std::runtime_error(what), time(t) {}
  double time;
};

/// Malformed record or report file.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_number(line) {}
  std::size_t line_number;
};

}  // namespace ddslit

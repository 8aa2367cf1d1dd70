#include "satlab/error.hpp"

namespace satlab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::invalid_parameter: return "invalid parameter";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::hypothesis_violation: return "hypothesis violation";
    case ErrorKind::no_solution: return "no solution";
    case ErrorKind::nonconvergence: return "nonconvergence";
    case ErrorKind::insufficient_data: return "insufficient data";
    case ErrorKind::experiment: return "experiment error";
    case ErrorKind::io: return "I/O error";
  }
  return "unknown error";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::hypothesis_violation:
      return 2;
    case ErrorKind::no_solution:
    case ErrorKind::nonconvergence:
    case ErrorKind::insufficient_data:
    case ErrorKind::experiment:
      return 3;
    default:
      return 1;
  }
}

}  // namespace satlab

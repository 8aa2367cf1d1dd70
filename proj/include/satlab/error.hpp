#pragma once

#include <stdexcept>
#include <string>

namespace satlab {

enum class ErrorKind {
  invalid_input,
  invalid_parameter,
  domain,
  hypothesis_violation,
  no_solution,
  nonconvergence,
  insufficient_data,
  experiment,
  io,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; the kind drives the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// 0 success, 1 invalid input, 2 hypothesis violation, 3 solver nonconvergence.
int exit_code_for(ErrorKind kind);

}  // namespace satlab

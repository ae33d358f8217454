#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace smelt {

enum class Errc {
  invalid_argument,
  input_shape,
  invalid_trace,
  no_signal,
  materialization,
  config,
  io,
  not_found,
  aborted,
  remote,
  internal,
};

const char* errc_name(Errc code);

/// Single exception type used across the engine; the C API maps code()
/// onto its status enum at the boundary.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace smelt

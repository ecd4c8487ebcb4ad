#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace topo {

enum class Errc {
  invalid_parameter,
  open_surface,
  empty_mesh,
  size_limit,
  capacity_exceeded,
  assembly_failed,
  undefined_similarity,
  numeric_overflow,
  io_error,
};

std::string_view to_string(Errc code) noexcept;

/// Domain error raised by every module. `code()` identifies the failure class
/// so callers (and the CLI) can react without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(Errc::invalid_parameter, what);
}

}  // namespace topo

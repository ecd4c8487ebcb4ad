#include "topo/error.hpp"

namespace topo {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::open_surface: return "open-surface";
    case Errc::empty_mesh: return "empty-mesh";
    case Errc::size_limit: return "size-limit";
    case Errc::capacity_exceeded: return "capacity-exceeded";
    case Errc::assembly_failed: return "assembly-failed";
    case Errc::undefined_similarity: return "undefined-similarity";
    case Errc::numeric_overflow: return "numeric-overflow";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

}  // namespace topo

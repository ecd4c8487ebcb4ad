#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "topo/point_cloud.hpp"

namespace topo {

struct PersistencePair {
  double birth = 0.0;
  double death = 0.0;
  bool essential = false;  // never dies below max_edge; death is set to max_edge

  double persistence() const { return death - birth; }
  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

struct DiagramProvenance {
  std::string filtration = "vietoris-rips";
  std::size_t point_count = 0;
  double max_edge = 0.0;
  double scale = 1.0;  // coordinates were divided by this
};

struct PersistenceDiagram {
  int dim = 1;
  std::vector<PersistencePair> pairs;
  DiagramProvenance provenance;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

/// Finite pairs only; this is the form used as a prediction target.
PersistenceDiagram finite_part(const PersistenceDiagram& diagram);

struct Simplex {
  std::array<int, 3> vertices{-1, -1, -1};  // ascending, unused slots -1
  int dim = 0;
  double value = 0.0;
};

/// Simplices sorted by (value, dim, vertices).
struct Filtration {
  std::vector<Simplex> simplices;
  std::size_t point_count = 0;
  double max_edge = 0.0;
};

constexpr std::size_t kDefaultPointCap = 2048;

Filtration rips_filtration(const PointCloud& cloud, double max_edge, int max_dim = 2,
                           std::size_t point_cap = kDefaultPointCap);

/// Z/2 boundary-matrix reduction with clearing. q must be 0 or 1 and the
/// filtration must contain simplices up to dimension q + 1.
PersistenceDiagram compute_persistence(const Filtration& filtration, int q);

struct RipsOptions {
  double max_edge = 2.0;
  std::size_t point_cap = kDefaultPointCap;
};

/// H0 and H1 of the Rips filtration without materializing triangles: union-find
/// for H0, cohomology with clearing and apparent pairs for H1. Returns diagrams
/// in the order of `dims`.
std::vector<PersistenceDiagram> rips_persistence(const PointCloud& cloud, const RipsOptions& options = {},
                                                 std::span<const int> dims = std::array{0, 1});

/// Keeps the ceil(keep_fraction * M) most persistent pairs.
PersistenceDiagram quantile_threshold(const PersistenceDiagram& diagram, double keep_fraction = 0.10);

/// Divides every coordinate by the largest coordinate across the collection.
std::pair<std::vector<PersistenceDiagram>, double> scale_dataset(std::span<const PersistenceDiagram> diagrams);

/// "dim,birth,death" CSV, one row per pair. Essential pairs are written only
/// when `include_essential` is set, with death = max_edge.
void write_diagram_csv(const std::filesystem::path& path, std::span<const PersistenceDiagram> diagrams,
                       bool include_essential = false);
std::vector<PersistenceDiagram> read_diagram_csv(const std::filesystem::path& path);
/// Reads the pairs of one dimension (empty diagram if none are listed).
PersistenceDiagram read_diagram_csv(const std::filesystem::path& path, int dim);

}  // namespace topo

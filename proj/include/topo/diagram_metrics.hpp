#pragma once

#include <filesystem>
#include <vector>

#include "topo/persistence.hpp"
#include "topo/point_cloud.hpp"

namespace topo {

/// Optimal partial matching with squared Euclidean ground cost; unmatched
/// points go to their diagonal projections. Returns the square root of the
/// total cost.
double wasserstein2(const PersistenceDiagram& a, const PersistenceDiagram& b);

/// Minimal worst L-infinity cost over partial matchings.
double bottleneck(const PersistenceDiagram& a, const PersistenceDiagram& b);

struct ImageParams {
  int resolution = 50;
  double sigma = 0.05;

  friend bool operator==(const ImageParams&, const ImageParams&) = default;
};

/// resolution x resolution grid over [0,1]^2 in (birth, persistence)
/// coordinates; pixels(r, c) covers birth cell c and persistence cell r.
struct PersistenceImage {
  ImageParams params;
  std::vector<double> pixels;  // row-major

  double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * params.resolution + col]; }
};

/// Each pair adds a normalized Gaussian at (b, d - b) weighted by d - b,
/// evaluated at cell centres and multiplied by the cell area.
PersistenceImage persistence_image(const PersistenceDiagram& diagram, const ImageParams& params = {});

/// Sum of squared pixel differences; both images must share params.
double pie(const PersistenceImage& predicted, const PersistenceImage& truth);
double pie(const PersistenceDiagram& predicted, const PersistenceDiagram& truth, const ImageParams& params = {});

/// Symmetric Hausdorff distance.
double hausdorff(const PointCloud& x, const PointCloud& y);
/// Average of the two directed mean nearest-neighbour distances.
double chamfer(const PointCloud& x, const PointCloud& y);

/// CSV grid: one image row per line, `resolution` comma-separated values.
void write_image_csv(const std::filesystem::path& path, const PersistenceImage& image);

}  // namespace topo

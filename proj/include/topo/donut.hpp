#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "topo/deform.hpp"
#include "topo/mesh.hpp"
#include "topo/point_cloud.hpp"

namespace topo {

/// Global topological label of a sample: connected components and total genus.
struct LabelPair {
  int beta0 = 1;
  int genus_total = 0;

  friend bool operator==(const LabelPair&, const LabelPair&) = default;
};

/// counts[j] = number of components with genus j.
struct GenusDecomposition {
  std::vector<int> counts;

  int components() const;
  int genus_total() const;
  /// Per-component genera in ascending order.
  std::vector<int> genera() const;

  friend bool operator==(const GenusDecomposition&, const GenusDecomposition&) = default;
  friend auto operator<=>(const GenusDecomposition&, const GenusDecomposition&) = default;
};

/// Ranges for randomized shape hyperparameters. Values are in construction
/// units; every component is refit into the unit ball before placement.
struct ShapeRanges {
  double scale_min = 0.6, scale_max = 1.4;
  double exponent_min = 0.4, exponent_max = 1.6;
  double toroid_ring_min = 1.4, toroid_ring_max = 2.5;
  double cone_height_min = 0.8, cone_height_max = 2.5;
  double tube_min = 0.28, tube_max = 0.4;  // torus SDF tube radius, ring radius 1
  double chain_turn_max = 0.87;            // radians between consecutive tori
  double twist_rate_max = 1.0;             // radians per unit length
  int superquadric_nu = 48, superquadric_nv = 32;
  int cone_segments = 48;
  int mc_resolution = 96;
  double mc_padding = 0.1;
  double softmin_sharpness = 32.0;
  double p_superellipsoid = 0.7;  // genus 0: superellipsoid vs cone
  double p_supertoroid = 0.5;     // genus 1: supertoroid vs torus SDF
};

struct GenerationConfig {
  int g_max = 5;
  int G_max = 10;
  int beta0_min = 1;
  int beta0_max = 6;
  int k_replicates = 1000;
  ShapeRanges shapes;
  double placement_gap = 0.05;  // fraction of the placement-region diameter
  int max_placement_attempts = 200;
  int max_placement_reseeds = 20;
  int max_sample_retries = 10;
  std::size_t points_per_sample = 1024;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ComponentRecord {
  int genus = 0;
  std::string family;  // superellipsoid | cone | supertoroid | torus_sdf | ktorus_sdf
  std::map<std::string, double> params;
  RigidTwist transform;
};

struct VerificationReport {
  int beta0_measured = 0;
  int genus_total_measured = 0;
  bool manifold = true;
  std::vector<long> euler_per_component;

  bool matches(const LabelPair& label) const {
    return manifold && beta0_measured == label.beta0 && genus_total_measured == label.genus_total;
  }
};

struct SampleManifest {
  std::string id;
  LabelPair label;
  std::uint64_t seed = 0;
  std::vector<ComponentRecord> components;
  std::string mesh_path;
  std::string cloud_path;
  VerificationReport verification;
};

struct DatasetManifest {
  GenerationConfig config;
  std::vector<SampleManifest> samples;
  std::optional<double> diagram_scale;
};

struct AssembledSample {
  std::vector<TriangleMesh> meshes;
  SampleManifest manifest;
};

/// Label multiset: exactly k_replicates labels per beta0, genus drawn uniformly
/// on [0, G_max] and rejected above min(G_max, beta0 * g_max).
std::vector<LabelPair> sample_labels(const GenerationConfig& config);

/// All non-negative count vectors x (indexed by genus 0..g_max) with
/// sum x = beta0 and sum j*x[j] = genus_total, in backtracking order.
std::vector<GenusDecomposition> enumerate_genus_decompositions(int beta0, int genus_total, int g_max);

/// Builds one mesh per component, augments each with a random rigid twist and
/// places them with pairwise clearance. Throws assembly_failed when placement
/// or component construction keeps failing.
AssembledSample assemble_sample(const LabelPair& label, const GenusDecomposition& decomposition,
                                const GenerationConfig& config, std::uint64_t seed);

/// Measures beta0, total genus and manifoldness from the meshes' connectivity.
VerificationReport verify_labels(const std::vector<TriangleMesh>& meshes);

/// Builds a single verified component mesh of the given genus (in its own
/// frame, fit into the unit ball).
TriangleMesh build_component(int genus, const GenerationConfig& config, std::uint64_t seed,
                             ComponentRecord* record = nullptr);

struct DatasetOptions {
  unsigned jobs = 1;
  std::optional<std::filesystem::path> out_dir;  // writes meshes/ and clouds/ when set
  bool keep_clouds = false;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct DatasetResult {
  DatasetManifest manifest;
  std::vector<PointCloud> clouds;  // filled when keep_clouds
};

/// Generates `count` verified samples with balanced labels. Rejected samples
/// are regenerated from a derived seed, never dropped.
DatasetResult generate_dataset(const GenerationConfig& config, std::size_t count, const DatasetOptions& options = {});

nlohmann::json to_json(const GenerationConfig& config);
GenerationConfig generation_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetManifest& manifest);
DatasetManifest dataset_manifest_from_json(const nlohmann::json& j);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace topo

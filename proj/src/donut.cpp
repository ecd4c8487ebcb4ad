#include "topo/donut.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "topo/error.hpp"
#include "topo/implicit.hpp"
#include "topo/io.hpp"
#include "topo/marching_cubes.hpp"
#include "topo/rng.hpp"
#include "topo/shapes.hpp"

namespace topo {

int GenusDecomposition::components() const {
  int n = 0;
  for (int c : counts) n += c;
  return n;
}

int GenusDecomposition::genus_total() const {
  int g = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) g += static_cast<int>(j) * counts[j];
  return g;
}

std::vector<int> GenusDecomposition::genera() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < counts.size(); ++j) out.insert(out.end(), counts[j], static_cast<int>(j));
  return out;
}

void GenerationConfig::validate() const {
  require(beta0_min >= 1 && beta0_min <= beta0_max, "need 1 <= beta0_min <= beta0_max");
  require(g_max >= 0 && g_max <= G_max, "need 0 <= g_max <= G_max");
  require(k_replicates >= 1, "k_replicates must be positive");
  require(placement_gap >= 0.0, "placement gap must be non-negative");
  require(max_placement_attempts >= 1 && max_placement_reseeds >= 1, "placement budgets must be positive");
  require(points_per_sample >= 1, "points_per_sample must be positive");
  require(shapes.p_superellipsoid >= 0 && shapes.p_superellipsoid <= 1 && shapes.p_supertoroid >= 0 &&
              shapes.p_supertoroid <= 1,
          "family probabilities must lie in [0, 1]");
}

std::vector<LabelPair> sample_labels(const GenerationConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, "labels"));
  std::vector<LabelPair> labels;
  labels.reserve(static_cast<std::size_t>(config.beta0_max - config.beta0_min + 1) * config.k_replicates);
  for (int beta0 = config.beta0_min; beta0 <= config.beta0_max; ++beta0) {
    const int cap = std::min(config.G_max, beta0 * config.g_max);
    for (int r = 0; r < config.k_replicates; ++r) {
      std::int64_t s;
      do {
        s = rng.uniform_int(0, config.G_max);
      } while (s > cap);
      labels.push_back({beta0, static_cast<int>(s)});
    }
  }
  return labels;
}

namespace {

void backtrack(int remaining_count, int remaining_sum, int genus, int g_max, std::vector<int>& x,
               std::vector<GenusDecomposition>& out) {
  if (genus > g_max) {
    if (remaining_count == 0 && remaining_sum == 0) out.push_back({x});
    return;
  }
  const int upper = genus == 0 ? remaining_count : std::min(remaining_count, remaining_sum / genus);
  for (int n = 0; n <= upper; ++n) {
    x.push_back(n);
    backtrack(remaining_count - n, remaining_sum - genus * n, genus + 1, g_max, x, out);
    x.pop_back();
  }
}

}  // namespace

std::vector<GenusDecomposition> enumerate_genus_decompositions(int beta0, int genus_total, int g_max) {
  require(beta0 >= 1, "beta0 must be at least 1");
  require(g_max >= 0, "g_max must be non-negative");
  std::vector<GenusDecomposition> out;
  if (genus_total < 0 || genus_total > g_max * beta0) return out;
  std::vector<int> x;
  backtrack(beta0, genus_total, 0, g_max, x, out);
  return out;
}

VerificationReport verify_labels(const std::vector<TriangleMesh>& meshes) {
  VerificationReport report;
  for (const auto& mesh : meshes) {
    for (const auto& part : split_components(mesh)) {
      ++report.beta0_measured;
      const long chi = euler_characteristic(part);
      report.euler_per_component.push_back(chi);
      const bool closed = is_manifold(part) && is_consistently_oriented(part);
      if (!closed || chi > 2 || chi % 2 != 0) {
        report.manifold = false;
        continue;
      }
      report.genus_total_measured += static_cast<int>((2 - chi) / 2);
    }
  }
  return report;
}

namespace {

bool is_closed_genus(const TriangleMesh& mesh, int genus) {
  return connected_components(mesh) == 1 && is_manifold(mesh) && is_consistently_oriented(mesh) &&
         euler_characteristic(mesh) == 2 - 2 * genus;
}

// Tori of ring radius 1 chained in the xy-plane. Neighbouring rings sit at a
// centre distance in [2, 2 + r] so their tubes overlap in one blob; turns are
// bounded so that non-neighbours stay apart.
ScalarField torus_chain(int k, const ShapeRanges& ranges, Rng& rng, ComponentRecord* record) {
  std::vector<double> tubes(k);
  for (auto& r : tubes) r = rng.uniform(ranges.tube_min, ranges.tube_max);
  std::vector<Vec3> centers;
  for (int attempt = 0; attempt < 100; ++attempt) {
    centers.assign(1, Vec3::Zero());
    double heading = rng.uniform(0.0, 2 * std::numbers::pi);
    for (int i = 1; i < k; ++i) {
      if (i > 1) heading += rng.uniform(-ranges.chain_turn_max, ranges.chain_turn_max);
      const double spacing = 2.0 + rng.uniform(0.0, std::min(tubes[i - 1], tubes[i]));
      centers.push_back(centers.back() + spacing * Vec3(std::cos(heading), std::sin(heading), 0.0));
    }
    bool clear = true;
    for (int i = 0; i < k && clear; ++i) {
      for (int j = i + 2; j < k && clear; ++j) {
        clear = (centers[i] - centers[j]).norm() > 2.0 + tubes[i] + tubes[j] + 0.5;
      }
    }
    if (clear) break;
  }
  std::vector<ScalarField> fields;
  for (int i = 0; i < k; ++i) {
    fields.push_back(torus_sdf(centers[i], Vec3::UnitZ(), 1.0, tubes[i]));
    if (record) {
      record->params["tube_" + std::to_string(i)] = tubes[i];
      record->params["center_x_" + std::to_string(i)] = centers[i].x();
      record->params["center_y_" + std::to_string(i)] = centers[i].y();
    }
  }
  if (record) record->params["softmin_sharpness"] = ranges.softmin_sharpness;
  return softmin_field(std::move(fields), ranges.softmin_sharpness);
}

TriangleMesh make_component(int genus, const GenerationConfig& config, Rng& rng, ComponentRecord& record) {
  const auto& sr = config.shapes;
  record = ComponentRecord{};
  record.genus = genus;
  auto scales = [&] {
    Scales s{rng.uniform(sr.scale_min, sr.scale_max), rng.uniform(sr.scale_min, sr.scale_max),
             rng.uniform(sr.scale_min, sr.scale_max)};
    record.params["scale_x"] = s.x;
    record.params["scale_y"] = s.y;
    record.params["scale_z"] = s.z;
    return s;
  };
  auto exponents = [&] {
    Exponents e{rng.uniform(sr.exponent_min, sr.exponent_max), rng.uniform(sr.exponent_min, sr.exponent_max)};
    record.params["epsilon_1"] = e.e1;
    record.params["epsilon_2"] = e.e2;
    return e;
  };
  const GridResolution res{sr.superquadric_nu, sr.superquadric_nv};

  if (genus == 0) {
    if (rng.bernoulli(sr.p_superellipsoid)) {
      record.family = "superellipsoid";
      const auto s = scales();
      return superellipsoid_mesh(s, exponents(), res);
    }
    record.family = "cone";
    const double radius = rng.uniform(sr.scale_min, sr.scale_max);
    const double height = rng.uniform(sr.cone_height_min, sr.cone_height_max);
    record.params["radius"] = radius;
    record.params["height"] = height;
    return cone_mesh(radius, height, sr.cone_segments);
  }
  if (genus == 1 && rng.bernoulli(sr.p_supertoroid)) {
    record.family = "supertoroid";
    const auto s = scales();
    const double ring = rng.uniform(sr.toroid_ring_min, sr.toroid_ring_max);
    record.params["ring_radius"] = ring;
    return supertoroid_mesh(s, ring, exponents(), res);
  }
  record.family = genus == 1 ? "torus_sdf" : "ktorus_sdf";
  record.params["k"] = genus;
  const ScalarField field = torus_chain(genus, sr, rng, &record);
  return marching_cubes(field, padded_grid(field.bounds, sr.mc_resolution, sr.mc_padding));
}

}  // namespace

TriangleMesh build_component(int genus, const GenerationConfig& config, std::uint64_t seed,
                             ComponentRecord* record) {
  require(genus >= 0 && genus <= config.g_max, "component genus out of range");
  constexpr int kAttempts = 8;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Rng rng(derive_seed(seed, "component_shape", static_cast<std::uint64_t>(attempt)));
    ComponentRecord local;
    TriangleMesh mesh;
    try {
      mesh = make_component(genus, config, rng, local);
    } catch (const Error& e) {
      if (e.code() == Errc::invalid_parameter) throw;
      continue;
    }
    if (!is_closed_genus(mesh, genus)) continue;
    if (record) *record = std::move(local);
    return center_and_fit(mesh, 1.0);
  }
  fail(Errc::assembly_failed, "could not build a verified genus-" + std::to_string(genus) + " component");
}

AssembledSample assemble_sample(const LabelPair& label, const GenusDecomposition& decomposition,
                                const GenerationConfig& config, std::uint64_t seed) {
  config.validate();
  require(decomposition.components() == label.beta0 && decomposition.genus_total() == label.genus_total,
          "decomposition does not match the label");
  const auto genera = decomposition.genera();
  const std::size_t n = genera.size();

  AssembledSample out;
  out.manifest.label = label;
  out.manifest.seed = seed;
  std::vector<TriangleMesh> local(n);
  out.manifest.components.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    auto& record = out.manifest.components[c];
    local[c] = build_component(genera[c], config, derive_seed(seed, "component", c), &record);
    Rng rng(derive_seed(seed, "augment", c));
    record.transform = random_rigid_twist(rng, config.shapes.twist_rate_max);
  }

  // Every component fits in the unit ball around the origin, and twists and
  // rotations about the origin keep it there, so bounding spheres of radius 1
  // separate components.
  const double side = 3.0 * std::cbrt(static_cast<double>(n));
  const double gap = config.placement_gap * (side * std::sqrt(3.0) + 2.0);
  const double min_center_distance = 2.0 + gap;
  std::vector<Vec3> centers;
  bool placed = false;
  for (int reseed = 0; reseed < config.max_placement_reseeds && !placed; ++reseed) {
    Rng rng(derive_seed(seed, "placement", static_cast<std::uint64_t>(reseed)));
    centers.clear();
    placed = true;
    for (std::size_t c = 0; c < n && placed; ++c) {
      bool ok = false;
      for (int attempt = 0; attempt < config.max_placement_attempts && !ok; ++attempt) {
        const Vec3 p(rng.uniform(-side / 2, side / 2), rng.uniform(-side / 2, side / 2),
                     rng.uniform(-side / 2, side / 2));
        ok = std::all_of(centers.begin(), centers.end(),
                         [&](const Vec3& q) { return (p - q).norm() >= min_center_distance; });
        if (ok) centers.push_back(p);
      }
      placed = ok;
    }
  }
  if (!placed) fail(Errc::assembly_failed, "component placement failed after all reseeds");

  for (std::size_t c = 0; c < n; ++c) {
    auto& transform = out.manifest.components[c].transform;
    transform.translation = centers[c];
    out.meshes.push_back(apply_rigid_twist(local[c], transform));
  }
  out.manifest.verification = verify_labels(out.meshes);
  return out;
}

namespace {

std::string sample_id(std::size_t index) {
  std::ostringstream os;
  os << "sample_" << std::setw(6) << std::setfill('0') << index;
  return os.str();
}

// Round-robin over beta0 so truncated counts stay balanced.
std::vector<LabelPair> dataset_labels(const GenerationConfig& config, std::size_t count) {
  const auto groups = static_cast<std::size_t>(config.beta0_max - config.beta0_min + 1);
  GenerationConfig c = config;
  c.k_replicates = static_cast<int>((count + groups - 1) / groups);
  const auto grouped = sample_labels(c);
  std::vector<LabelPair> out;
  out.reserve(count);
  for (std::size_t r = 0; out.size() < count; ++r) {
    for (std::size_t g = 0; g < groups && out.size() < count; ++g) {
      out.push_back(grouped[g * c.k_replicates + r]);
    }
  }
  return out;
}

}  // namespace

DatasetResult generate_dataset(const GenerationConfig& config, std::size_t count, const DatasetOptions& options) {
  config.validate();
  require(count >= 1, "dataset count must be positive");
  const auto labels = dataset_labels(config, count);

  DatasetResult result;
  result.manifest.config = config;
  result.manifest.samples.resize(count);
  if (options.keep_clouds) result.clouds.resize(count);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::mutex progress_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::lock_guard lock(error_mutex);
        if (first_error) return;
      }
      try {
        const LabelPair label = labels[i];
        const std::uint64_t sample_seed = derive_seed(config.seed, "sample", i);
        const auto solutions = enumerate_genus_decompositions(label.beta0, label.genus_total, config.g_max);
        require(!solutions.empty(), "label has no genus decomposition");
        std::optional<AssembledSample> sample;
        for (int retry = 0; retry <= config.max_sample_retries && !sample; ++retry) {
          const std::uint64_t seed = retry == 0 ? sample_seed : derive_seed(sample_seed, "retry", retry);
          Rng pick(derive_seed(seed, "decomposition"));
          const auto& decomposition =
              solutions[static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(solutions.size()) - 1))];
          try {
            auto candidate = assemble_sample(label, decomposition, config, seed);
            if (candidate.manifest.verification.matches(label)) sample = std::move(candidate);
          } catch (const Error& e) {
            if (e.code() != Errc::assembly_failed) throw;
          }
        }
        if (!sample) fail(Errc::assembly_failed, "sample " + std::to_string(i) + " failed after all retries");

        auto& manifest = sample->manifest;
        manifest.id = sample_id(i);
        const TriangleMesh merged = merge_meshes(sample->meshes);
        const PointCloud cloud =
            normalize_unit_sphere(sample_surface(merged, config.points_per_sample, derive_seed(manifest.seed, "cloud")));
        if (options.out_dir) {
          manifest.mesh_path = "meshes/" + manifest.id + ".off";
          manifest.cloud_path = "clouds/" + manifest.id + ".pcf";
          write_off(*options.out_dir / manifest.mesh_path, merged);
          write_pcf(*options.out_dir / manifest.cloud_path, cloud);
        }
        if (options.keep_clouds) result.clouds[i] = cloud;
        result.manifest.samples[i] = std::move(manifest);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
      const std::size_t finished = done.fetch_add(1) + 1;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(finished, count);
      }
    }
  };

  const unsigned jobs = std::max(1u, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  if (options.out_dir) write_manifest(*options.out_dir / "manifest.json", result.manifest);
  return result;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json transform_json(const RigidTwist& t) {
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) rot.push_back({t.rotation(r, 0), t.rotation(r, 1), t.rotation(r, 2)});
  return {{"rotation", rot},
          {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}},
          {"twist_axis", {t.twist_axis.x(), t.twist_axis.y(), t.twist_axis.z()}},
          {"twist_rate", t.twist_rate}};
}

RigidTwist transform_from_json(const nlohmann::json& j) {
  RigidTwist t;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t.rotation(r, c) = j.at("rotation").at(r).at(c).get<double>();
  }
  for (int a = 0; a < 3; ++a) {
    t.translation[a] = j.at("translation").at(a).get<double>();
    t.twist_axis[a] = j.at("twist_axis").at(a).get<double>();
  }
  t.twist_rate = j.at("twist_rate").get<double>();
  return t;
}

}  // namespace

nlohmann::json to_json(const GenerationConfig& c) {
  const auto& s = c.shapes;
  return {{"g_max", c.g_max},
          {"G_max", c.G_max},
          {"beta0_min", c.beta0_min},
          {"beta0_max", c.beta0_max},
          {"k_replicates", c.k_replicates},
          {"placement_gap", c.placement_gap},
          {"max_placement_attempts", c.max_placement_attempts},
          {"max_placement_reseeds", c.max_placement_reseeds},
          {"max_sample_retries", c.max_sample_retries},
          {"points_per_sample", c.points_per_sample},
          {"seed", c.seed},
          {"shapes",
           {{"scale_min", s.scale_min},
            {"scale_max", s.scale_max},
            {"exponent_min", s.exponent_min},
            {"exponent_max", s.exponent_max},
            {"toroid_ring_min", s.toroid_ring_min},
            {"toroid_ring_max", s.toroid_ring_max},
            {"cone_height_min", s.cone_height_min},
            {"cone_height_max", s.cone_height_max},
            {"tube_min", s.tube_min},
            {"tube_max", s.tube_max},
            {"chain_turn_max", s.chain_turn_max},
            {"twist_rate_max", s.twist_rate_max},
            {"superquadric_nu", s.superquadric_nu},
            {"superquadric_nv", s.superquadric_nv},
            {"cone_segments", s.cone_segments},
            {"mc_resolution", s.mc_resolution},
            {"mc_padding", s.mc_padding},
            {"softmin_sharpness", s.softmin_sharpness},
            {"p_superellipsoid", s.p_superellipsoid},
            {"p_supertoroid", s.p_supertoroid}}}};
}

GenerationConfig generation_config_from_json(const nlohmann::json& j) {
  GenerationConfig c;
  auto get = [&](const nlohmann::json& obj, const char* key, auto& field) {
    if (obj.contains(key)) field = obj.at(key).get<std::decay_t<decltype(field)>>();
  };
  get(j, "g_max", c.g_max);
  get(j, "G_max", c.G_max);
  get(j, "beta0_min", c.beta0_min);
  get(j, "beta0_max", c.beta0_max);
  get(j, "k_replicates", c.k_replicates);
  get(j, "placement_gap", c.placement_gap);
  get(j, "max_placement_attempts", c.max_placement_attempts);
  get(j, "max_placement_reseeds", c.max_placement_reseeds);
  get(j, "max_sample_retries", c.max_sample_retries);
  get(j, "points_per_sample", c.points_per_sample);
  get(j, "seed", c.seed);
  if (j.contains("shapes")) {
    const auto& s = j.at("shapes");
    auto& r = c.shapes;
    get(s, "scale_min", r.scale_min);
    get(s, "scale_max", r.scale_max);
    get(s, "exponent_min", r.exponent_min);
    get(s, "exponent_max", r.exponent_max);
    get(s, "toroid_ring_min", r.toroid_ring_min);
    get(s, "toroid_ring_max", r.toroid_ring_max);
    get(s, "cone_height_min", r.cone_height_min);
    get(s, "cone_height_max", r.cone_height_max);
    get(s, "tube_min", r.tube_min);
    get(s, "tube_max", r.tube_max);
    get(s, "chain_turn_max", r.chain_turn_max);
    get(s, "twist_rate_max", r.twist_rate_max);
    get(s, "superquadric_nu", r.superquadric_nu);
    get(s, "superquadric_nv", r.superquadric_nv);
    get(s, "cone_segments", r.cone_segments);
    get(s, "mc_resolution", r.mc_resolution);
    get(s, "mc_padding", r.mc_padding);
    get(s, "softmin_sharpness", r.softmin_sharpness);
    get(s, "p_superellipsoid", r.p_superellipsoid);
    get(s, "p_supertoroid", r.p_supertoroid);
  }
  return c;
}

nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : m.samples) {
    nlohmann::json components = nlohmann::json::array();
    for (const auto& c : s.components) {
      components.push_back(
          {{"genus", c.genus}, {"family", c.family}, {"params", c.params}, {"transform", transform_json(c.transform)}});
    }
    samples.push_back({{"id", s.id},
                       {"beta0", s.label.beta0},
                       {"genus", s.label.genus_total},
                       {"seed", s.seed},
                       {"mesh", s.mesh_path},
                       {"cloud", s.cloud_path},
                       {"components", components},
                       {"verification",
                        {{"beta0", s.verification.beta0_measured},
                         {"genus", s.verification.genus_total_measured},
                         {"manifold", s.verification.manifold},
                         {"euler", s.verification.euler_per_component}}}});
  }
  nlohmann::json j = {{"format", "donut-manifest/1"},
                      {"config", to_json(m.config)},
                      {"count", m.samples.size()},
                      {"samples", samples}};
  if (m.diagram_scale) j["diagram_scale"] = *m.diagram_scale;
  return j;
}

DatasetManifest dataset_manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.config = generation_config_from_json(j.at("config"));
  if (j.contains("diagram_scale")) m.diagram_scale = j.at("diagram_scale").get<double>();
  for (const auto& s : j.at("samples")) {
    SampleManifest sm;
    sm.id = s.at("id").get<std::string>();
    sm.label = {s.at("beta0").get<int>(), s.at("genus").get<int>()};
    sm.seed = s.at("seed").get<std::uint64_t>();
    sm.mesh_path = s.value("mesh", "");
    sm.cloud_path = s.value("cloud", "");
    for (const auto& c : s.at("components")) {
      ComponentRecord rec;
      rec.genus = c.at("genus").get<int>();
      rec.family = c.at("family").get<std::string>();
      rec.params = c.at("params").get<std::map<std::string, double>>();
      rec.transform = transform_from_json(c.at("transform"));
      sm.components.push_back(std::move(rec));
    }
    const auto& v = s.at("verification");
    sm.verification.beta0_measured = v.at("beta0").get<int>();
    sm.verification.genus_total_measured = v.at("genus").get<int>();
    sm.verification.manifold = v.at("manifold").get<bool>();
    sm.verification.euler_per_component = v.at("euler").get<std::vector<long>>();
    m.samples.push_back(std::move(sm));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  auto out = open_output(path);
  out << to_json(manifest).dump(1) << '\n';
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return dataset_manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::io_error, "malformed manifest '" + path.string() + "': " + e.what());
  }
}

}  // namespace topo

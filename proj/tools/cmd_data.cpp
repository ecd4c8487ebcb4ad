#include <fstream>
#include <iostream>
#include <memory>

#include "common.hpp"
#include "topo/donut.hpp"
#include "topo/error.hpp"
#include "topo/io.hpp"
#include "topo/point_cloud.hpp"

namespace topo::cli {

namespace {

GenerationConfig load_generation_config(const std::string& path) {
  if (path.empty()) return {};
  auto in = open_input(path);
  try {
    return generation_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::io_error, "malformed generation config '" + path + "': " + e.what());
  }
}

void register_donut(CLI::App& app) {
  auto* donut = app.add_subcommand("donut", "synthetic multi-component surface datasets");
  donut->require_subcommand(1);

  struct Gen {
    std::size_t count = 0;
    std::uint64_t seed = 0;
    std::string out, config;
    std::optional<std::size_t> points;
    std::optional<int> beta0_min, beta0_max, g_max, genus_max, mc_resolution;
    unsigned jobs = 1;
    bool quiet = false;
  };
  auto g = std::make_shared<Gen>();
  auto* gen = donut->add_subcommand("gen", "generate meshes, point clouds and a manifest");
  gen->add_option("--count", g->count, "number of samples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", g->seed, "master seed")->capture_default_str();
  gen->add_option("--out", g->out, "output directory")->required();
  gen->add_option("--config", g->config, "generation config JSON (flags below override it)");
  gen->add_option("--points", g->points, "points sampled per surface");
  gen->add_option("--beta0-min", g->beta0_min, "smallest component count");
  gen->add_option("--beta0-max", g->beta0_max, "largest component count");
  gen->add_option("--component-genus-max", g->g_max, "largest genus of a single component");
  gen->add_option("--genus-max", g->genus_max, "largest total genus");
  gen->add_option("--mc-resolution", g->mc_resolution, "marching cubes grid resolution");
  gen->add_flag("-q,--quiet", g->quiet, "no progress output");
  add_jobs_option(gen, g->jobs);
  gen->callback([g] {
    auto config = load_generation_config(g->config);
    config.seed = g->seed;
    if (g->points) config.points_per_sample = *g->points;
    if (g->beta0_min) config.beta0_min = *g->beta0_min;
    if (g->beta0_max) config.beta0_max = *g->beta0_max;
    if (g->g_max) config.g_max = *g->g_max;
    if (g->genus_max) config.G_max = *g->genus_max;
    if (g->mc_resolution) config.shapes.mc_resolution = *g->mc_resolution;
    DatasetOptions options;
    options.jobs = g->jobs;
    options.out_dir = g->out;
    if (!g->quiet) {
      options.progress = [](std::size_t done, std::size_t total) {
        if (done == total || done % 50 == 0) std::cerr << "generated " << done << "/" << total << '\n';
      };
    }
    const auto result = generate_dataset(config, g->count, options);
    write_manifest(std::filesystem::path(g->out) / "manifest.json", result.manifest);
    std::cout << "wrote " << result.manifest.samples.size() << " samples to " << g->out << '\n';
  });

  struct Verify {
    std::string dir, mesh;
    std::optional<int> beta0, genus;
    unsigned jobs = 1;
  };
  auto v = std::make_shared<Verify>();
  auto* verify = donut->add_subcommand("verify", "re-measure beta0, genus and manifoldness");
  auto* dir_opt = verify->add_option("--dir", v->dir, "dataset directory with manifest.json");
  auto* mesh_opt = verify->add_option("--mesh", v->mesh, "single mesh (OFF or OBJ)");
  dir_opt->excludes(mesh_opt);
  verify->add_option("--beta0", v->beta0, "expected components for --mesh")->needs(mesh_opt);
  verify->add_option("--genus", v->genus, "expected total genus for --mesh")->needs(mesh_opt);
  add_jobs_option(verify, v->jobs);
  verify->callback([v] {
    if (!v->mesh.empty()) {
      const auto report = verify_labels({read_mesh(v->mesh)});
      std::cout << "beta0=" << report.beta0_measured << " genus=" << report.genus_total_measured
                << " manifold=" << (report.manifold ? "yes" : "no") << '\n';
      const bool ok = report.manifold && (!v->beta0 || *v->beta0 == report.beta0_measured) &&
                      (!v->genus || *v->genus == report.genus_total_measured);
      if (!ok) fail(Errc::invalid_parameter, "mesh does not match the expected labels");
      return;
    }
    if (v->dir.empty()) throw CLI::RequiredError("--dir or --mesh");
    const std::filesystem::path dir(v->dir);
    const auto manifest = read_manifest(dir / "manifest.json");
    std::vector<char> ok(manifest.samples.size(), 0);
    parallel_for(manifest.samples.size(), v->jobs, [&](std::size_t i) {
      const auto& s = manifest.samples[i];
      ok[i] = verify_labels({read_mesh(dir / s.mesh_path)}).matches(s.label);
    });
    std::size_t failed = 0;
    for (std::size_t i = 0; i < ok.size(); ++i) {
      if (!ok[i]) {
        ++failed;
        std::cerr << "mismatch: " << manifest.samples[i].id << '\n';
      }
    }
    std::cout << (ok.size() - failed) << "/" << ok.size() << " samples verified\n";
    if (failed) fail(Errc::invalid_parameter, std::to_string(failed) + " samples failed verification");
  });
}

void register_cloud(CLI::App& app) {
  auto* cloud = app.add_subcommand("cloud", "surface sampling and normalization");
  cloud->require_subcommand(1);

  struct Sample {
    std::string mesh, out;
    std::size_t points = 1024;
    std::uint64_t seed = 0;
    bool raw = false;
  };
  auto s = std::make_shared<Sample>();
  auto* sample = cloud->add_subcommand("sample", "area-weighted uniform samples of a mesh surface");
  sample->add_option("--mesh", s->mesh, "input mesh (OFF or OBJ)")->required();
  sample->add_option("--points", s->points, "number of points")->capture_default_str()->check(CLI::PositiveNumber);
  sample->add_option("--seed", s->seed, "sampling seed")->capture_default_str();
  sample->add_option("--out", s->out, "output cloud (.pcf or .csv)")->required();
  sample->add_flag("--raw", s->raw, "skip centring and scaling into the unit sphere");
  sample->callback([s] {
    auto points = sample_surface(read_mesh(s->mesh), s->points, s->seed);
    if (!s->raw) points = normalize_unit_sphere(points);
    write_cloud(s->out, points);
    write_sidecar(s->out, "cloud sample",
                  {{"mesh", s->mesh}, {"points", s->points}, {"seed", s->seed}, {"normalized", !s->raw}});
  });

  struct Normalize {
    std::string in, out;
  };
  auto n = std::make_shared<Normalize>();
  auto* normalize = cloud->add_subcommand("normalize", "centre at the origin and scale into the unit sphere");
  normalize->add_option("--in", n->in, "input cloud")->required();
  normalize->add_option("--out", n->out, "output cloud")->required();
  normalize->callback([n] {
    write_cloud(n->out, normalize_unit_sphere(read_cloud(n->in)));
    write_sidecar(n->out, "cloud normalize", {{"in", n->in}});
  });
}

void register_ph(CLI::App& app) {
  auto* ph = app.add_subcommand("ph", "Vietoris-Rips persistence diagrams");
  ph->require_subcommand(1);

  struct Compute {
    std::string cloud, out, dataset;
    double max_edge = 2.0;
    std::size_t point_cap = kDefaultPointCap;
    std::vector<int> dims{0, 1};
    bool essential = false;
    unsigned jobs = 1;
  };
  auto c = std::make_shared<Compute>();
  auto* compute = ph->add_subcommand("compute", "H0/H1 diagrams of point clouds");
  auto* cloud_opt = compute->add_option("--cloud", c->cloud, "input cloud (.pcf or .csv)");
  auto* dataset_opt =
      compute->add_option("--dataset", c->dataset, "dataset directory; writes diagrams/<sample>.csv for every cloud");
  cloud_opt->excludes(dataset_opt);
  compute->add_option("--out", c->out, "output diagram CSV (with --cloud)")->needs(cloud_opt);
  compute->add_option("--max-edge", c->max_edge, "largest Rips scale")->capture_default_str();
  compute->add_option("--point-cap", c->point_cap, "refuse clouds larger than this")->capture_default_str();
  compute->add_option("--dims", c->dims, "homology dimensions")->delimiter(',')->capture_default_str();
  compute->add_flag("--essential", c->essential, "also write never-dying classes with death = max edge");
  add_jobs_option(compute, c->jobs);
  compute->callback([c] {
    RipsOptions options{c->max_edge, c->point_cap};
    const nlohmann::json params = {{"max_edge", c->max_edge},
                                   {"point_cap", c->point_cap},
                                   {"dims", c->dims},
                                   {"essential", c->essential}};
    if (!c->cloud.empty()) {
      if (c->out.empty()) throw CLI::RequiredError("--out");
      const auto diagrams = rips_persistence(read_cloud(c->cloud), options, c->dims);
      write_diagram_csv(c->out, diagrams, c->essential);
      auto p = params;
      p["cloud"] = c->cloud;
      write_sidecar(c->out, "ph compute", p);
      return;
    }
    if (c->dataset.empty()) throw CLI::RequiredError("--cloud or --dataset");
    const std::filesystem::path dir(c->dataset);
    const auto manifest = read_manifest(dir / "manifest.json");
    parallel_for(manifest.samples.size(), c->jobs, [&](std::size_t i) {
      const auto& s = manifest.samples[i];
      const auto diagrams = rips_persistence(read_cloud(dir / s.cloud_path), options, c->dims);
      write_diagram_csv(dir / "diagrams" / (s.id + ".csv"), diagrams, c->essential);
    });
    write_run_file(dir / "diagrams", "ph compute", params);
    std::cout << "wrote " << manifest.samples.size() << " diagrams to " << (dir / "diagrams").string() << '\n';
  });

  struct Threshold {
    std::string in, out;
    double keep = 0.10;
  };
  auto t = std::make_shared<Threshold>();
  auto* threshold = ph->add_subcommand("threshold", "keep the most persistent fraction of pairs per dimension");
  threshold->add_option("--in", t->in, "input diagram CSV")->required();
  threshold->add_option("--out", t->out, "output diagram CSV")->required();
  threshold->add_option("--keep", t->keep, "fraction of pairs kept")->capture_default_str();
  threshold->callback([t] {
    auto diagrams = read_diagram_csv(t->in);
    for (auto& d : diagrams) d = quantile_threshold(d, t->keep);
    write_diagram_csv(t->out, diagrams);
    write_sidecar(t->out, "ph threshold", {{"in", t->in}, {"keep", t->keep}});
  });

  struct Scale {
    std::vector<std::string> in;
    std::string out_dir;
  };
  auto sc = std::make_shared<Scale>();
  auto* scale = ph->add_subcommand("scale", "divide a collection of diagrams by its largest coordinate");
  scale->add_option("--in", sc->in, "diagram CSVs or directories of them")->required();
  scale->add_option("--out-dir", sc->out_dir, "output directory (same file names)")->required();
  scale->callback([sc] {
    const auto files = expand_csv_inputs(sc->in);
    if (files.empty()) fail(Errc::invalid_parameter, "no diagram files given");
    std::vector<PersistenceDiagram> all;
    std::vector<std::size_t> counts;
    for (const auto& f : files) {
      auto ds = read_diagram_csv(f);
      counts.push_back(ds.size());
      all.insert(all.end(), ds.begin(), ds.end());
    }
    const auto [scaled, factor] = scale_dataset(all);
    const std::filesystem::path out(sc->out_dir);
    std::size_t k = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
      std::vector<PersistenceDiagram> part(scaled.begin() + static_cast<long>(k),
                                           scaled.begin() + static_cast<long>(k + counts[i]));
      k += counts[i];
      if (std::filesystem::weakly_canonical(out / files[i].filename()) == std::filesystem::weakly_canonical(files[i])) {
        fail(Errc::invalid_parameter, "refusing to overwrite input '" + files[i].string() + "'");
      }
      write_diagram_csv(out / files[i].filename(), part);
    }
    std::vector<std::string> names;
    for (const auto& f : files) names.push_back(f.string());
    write_run_file(out, "ph scale", {{"inputs", names}, {"scale", factor}});
    print_value(factor);
  });
}

}  // namespace

void register_data_commands(CLI::App& app) {
  register_donut(app);
  register_cloud(app);
  register_ph(app);
}

}  // namespace topo::cli

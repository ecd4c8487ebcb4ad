#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "topo/assignment.hpp"
#include "topo/diagram_metrics.hpp"
#include "topo/donut.hpp"
#include "topo/error.hpp"
#include "topo/filtr.hpp"
#include "topo/io.hpp"
#include "topo/persistence.hpp"
#include "topo/point_cloud.hpp"
#include "topo/probe.hpp"
#include "topo/set_prediction.hpp"
#include "topo/similarity.hpp"
#include "topo/vectorize.hpp"

namespace py = pybind11;
using namespace topo;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

PointCloud to_cloud(const RowMatrix& points) {
  require(points.cols() == 3, "points must have shape (n, 3)");
  PointCloud c;
  c.points.reserve(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) c.points.emplace_back(points(i, 0), points(i, 1), points(i, 2));
  return c;
}

RowMatrix from_cloud(const PointCloud& cloud) {
  RowMatrix m(cloud.size(), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) m.row(i) = cloud.points[i].transpose();
  return m;
}

// Diagrams cross the boundary as (k, 2) arrays of finite (birth, death) pairs.
PersistenceDiagram to_diagram(const RowMatrix& pairs) {
  require(pairs.rows() == 0 || pairs.cols() == 2, "diagram must have shape (k, 2)");
  PersistenceDiagram d;
  for (Eigen::Index i = 0; i < pairs.rows(); ++i) d.pairs.push_back({pairs(i, 0), pairs(i, 1), false});
  return d;
}

RowMatrix from_diagram(const PersistenceDiagram& d) {
  RowMatrix m(d.size(), 2);
  for (std::size_t i = 0; i < d.size(); ++i) m.row(i) << d.pairs[i].birth, d.pairs[i].death;
  return m;
}

PredictionSet to_prediction(const RowMatrix& m) {
  require(m.rows() == 0 || m.cols() == 3, "predictions must have shape (n, 3): birth, death, logit");
  PredictionSet p;
  for (Eigen::Index i = 0; i < m.rows(); ++i) p.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return p;
}

RowMatrix from_prediction(const PredictionSet& p) {
  RowMatrix m(p.size(), 3);
  for (std::size_t i = 0; i < p.size(); ++i) m.row(i) << p[i].birth, p[i].death, p[i].logit;
  return m;
}

LossWeights weights_from(double mu_recon, double mu_exist, double mu_diag, double lambda_reg, double lambda_exist) {
  LossWeights w{mu_recon, mu_exist, mu_diag, lambda_reg, lambda_exist};
  w.validate();
  return w;
}

py::dict diagram_dict(const PersistenceDiagram& d) {
  py::dict out;
  out["dim"] = d.dim;
  out["pairs"] = from_diagram(finite_part(d));
  std::vector<double> essential;
  for (const auto& p : d.pairs)
    if (p.essential) essential.push_back(p.birth);
  out["essential_births"] = essential;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of topofiltr";

  static py::exception<Error> error(m, "TopoError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  // Dataset generation and verification.
  m.def(
      "generate_dataset",
      [](std::size_t count, std::uint64_t seed, std::optional<std::filesystem::path> out_dir, std::size_t points,
         int beta0_min, int beta0_max, int g_max, int G_max, int mc_resolution, unsigned jobs) {
        GenerationConfig config;
        config.seed = seed;
        config.points_per_sample = points;
        config.beta0_min = beta0_min;
        config.beta0_max = beta0_max;
        config.g_max = g_max;
        config.G_max = G_max;
        config.shapes.mc_resolution = mc_resolution;
        DatasetOptions options;
        options.jobs = jobs;
        options.out_dir = out_dir;
        options.keep_clouds = true;
        DatasetResult r;
        {
          py::gil_scoped_release release;
          r = generate_dataset(config, count, options);
        }
        if (out_dir) write_manifest(*out_dir / "manifest.json", r.manifest);
        std::vector<RowMatrix> clouds;
        for (const auto& c : r.clouds) clouds.push_back(from_cloud(c));
        return std::make_pair(to_json(r.manifest).dump(), clouds);
      },
      py::arg("count"), py::arg("seed") = 0, py::arg("out_dir") = py::none(), py::arg("points") = 1024,
      py::arg("beta0_min") = 1, py::arg("beta0_max") = 6, py::arg("g_max") = 5, py::arg("G_max") = 10,
      py::arg("mc_resolution") = 96, py::arg("jobs") = 1);
  m.def(
      "verify_mesh",
      [](const std::filesystem::path& path) {
        const auto r = verify_labels({read_mesh(path)});
        py::dict out;
        out["beta0"] = r.beta0_measured;
        out["genus"] = r.genus_total_measured;
        out["manifold"] = r.manifold;
        return out;
      },
      py::arg("path"));

  // Point clouds.
  m.def("read_cloud", [](const std::filesystem::path& p) { return from_cloud(read_pcf(p)); }, py::arg("path"));
  m.def("write_cloud", [](const std::filesystem::path& p, const RowMatrix& x) { write_pcf(p, to_cloud(x)); },
        py::arg("path"), py::arg("points"));
  m.def("sample_mesh",
        [](const std::filesystem::path& mesh, std::size_t n, std::uint64_t seed) {
          return from_cloud(sample_surface(read_mesh(mesh), n, seed));
        },
        py::arg("mesh"), py::arg("n_points") = 1024, py::arg("seed") = 0);
  m.def("normalize_unit_sphere", [](const RowMatrix& x) { return from_cloud(normalize_unit_sphere(to_cloud(x))); },
        py::arg("points"));
  m.def("hausdorff", [](const RowMatrix& x, const RowMatrix& y) { return hausdorff(to_cloud(x), to_cloud(y)); });
  m.def("chamfer", [](const RowMatrix& x, const RowMatrix& y) { return chamfer(to_cloud(x), to_cloud(y)); });

  // Persistence.
  m.def(
      "rips_persistence",
      [](const RowMatrix& points, double max_edge, std::vector<int> dims, std::size_t point_cap) {
        const auto cloud = to_cloud(points);
        std::vector<PersistenceDiagram> ds;
        {
          py::gil_scoped_release release;
          ds = rips_persistence(cloud, {max_edge, point_cap}, dims);
        }
        py::list out;
        for (const auto& d : ds) out.append(diagram_dict(d));
        return out;
      },
      py::arg("points"), py::arg("max_edge") = 2.0, py::arg("dims") = std::vector<int>{0, 1},
      py::arg("point_cap") = kDefaultPointCap);
  m.def("quantile_threshold",
        [](const RowMatrix& d, double keep) { return from_diagram(quantile_threshold(to_diagram(d), keep)); },
        py::arg("diagram"), py::arg("keep_fraction") = 0.10);
  m.def(
      "scale_dataset",
      [](const std::vector<RowMatrix>& diagrams) {
        std::vector<PersistenceDiagram> ds;
        for (const auto& d : diagrams) ds.push_back(to_diagram(d));
        auto [scaled, s] = scale_dataset(ds);
        std::vector<RowMatrix> out;
        for (const auto& d : scaled) out.push_back(from_diagram(d));
        return std::make_pair(out, s);
      },
      py::arg("diagrams"));
  m.def("read_diagram_csv",
        [](const std::filesystem::path& p, int dim) { return from_diagram(finite_part(read_diagram_csv(p, dim))); },
        py::arg("path"), py::arg("dim") = 1);

  // Diagram metrics.
  m.def("wasserstein2", [](const RowMatrix& a, const RowMatrix& b) { return wasserstein2(to_diagram(a), to_diagram(b)); });
  m.def("bottleneck", [](const RowMatrix& a, const RowMatrix& b) { return bottleneck(to_diagram(a), to_diagram(b)); });
  m.def(
      "persistence_image",
      [](const RowMatrix& d, int resolution, double sigma) {
        const auto img = persistence_image(to_diagram(d), {resolution, sigma});
        return RowMatrix(Eigen::Map<const RowMatrix>(img.pixels.data(), resolution, resolution));
      },
      py::arg("diagram"), py::arg("resolution") = 50, py::arg("sigma") = 0.05);
  m.def("pie",
        [](const RowMatrix& pred, const RowMatrix& truth, int resolution, double sigma) {
          return pie(to_diagram(pred), to_diagram(truth), {resolution, sigma});
        },
        py::arg("predicted"), py::arg("truth"), py::arg("resolution") = 50, py::arg("sigma") = 0.05);
  m.def(
      "hungarian",
      [](const Eigen::MatrixXd& cost) {
        const auto a = hungarian(cost);
        return std::make_pair(a.row_to_col, a.cost);
      },
      py::arg("cost"));

  // Set-prediction losses.
  m.def(
      "total_loss",
      [](const RowMatrix& pred, const RowMatrix& target, double mu_recon, double mu_exist, double mu_diag,
         double lambda_reg, double lambda_exist) {
        const auto w = weights_from(mu_recon, mu_exist, mu_diag, lambda_reg, lambda_exist);
        const auto l = total_loss(to_prediction(pred), to_diagram(target).pairs, w);
        py::dict out;
        out["total"] = l.total;
        out["recon"] = l.recon;
        out["exist"] = l.exist;
        out["diag"] = l.diag;
        out["assignment"] = l.assignment.row_to_col;
        return out;
      },
      py::arg("pred"), py::arg("target"), py::arg("mu_recon") = 1.0, py::arg("mu_exist") = 0.1,
      py::arg("mu_diag") = 0.1, py::arg("lambda_reg") = 1.0, py::arg("lambda_exist") = 0.1);
  m.def(
      "loss_gradients",
      [](const RowMatrix& pred, const RowMatrix& target, double mu_recon, double mu_exist, double mu_diag,
         double lambda_reg, double lambda_exist) {
        const auto w = weights_from(mu_recon, mu_exist, mu_diag, lambda_reg, lambda_exist);
        const auto g = loss_gradients(to_prediction(pred), to_diagram(target).pairs, w);
        RowMatrix out(g.birth.size(), 3);
        for (std::size_t i = 0; i < g.birth.size(); ++i) out.row(i) << g.birth[i], g.death[i], g.logit[i];
        return out;
      },
      py::arg("pred"), py::arg("target"), py::arg("mu_recon") = 1.0, py::arg("mu_exist") = 0.1,
      py::arg("mu_diag") = 0.1, py::arg("lambda_reg") = 1.0, py::arg("lambda_exist") = 0.1);

  // Vectorization, similarity and probing.
  m.def(
      "topk_vectorize",
      [](const std::vector<RowMatrix>& diagrams, std::size_t k) {
        std::vector<PersistenceDiagram> ds;
        for (const auto& d : diagrams) ds.push_back(to_diagram(d));
        return topk_vectorize(ds, k);
      },
      py::arg("diagrams"), py::arg("k") = 128);
  m.def("linear_cka", &linear_cka, py::arg("a"), py::arg("b"));
  m.def(
      "permutation_ablation",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double alpha, std::uint64_t seed, int repeats) {
        return permutation_ablation(a, b, alpha, seed, repeats).mean;
      },
      py::arg("a"), py::arg("b"), py::arg("alpha"), py::arg("seed") = 0, py::arg("repeats") = 3);
  m.def(
      "train_linear_probe",
      [](const Eigen::MatrixXd& x, const std::vector<int>& labels, std::optional<std::string> task, int folds,
         int steps, double learning_rate, std::uint64_t seed) {
        ProbeOptions o = task ? ProbeOptions::for_task(*task) : ProbeOptions{};
        o.folds = folds;
        o.steps = steps;
        o.learning_rate = learning_rate;
        o.seed = seed;
        ProbeResult r;
        {
          py::gil_scoped_release release;
          r = train_linear_probe(x, labels, o);
        }
        py::dict out;
        out["fold_accuracy"] = r.fold_accuracy;
        out["mean_accuracy"] = r.mean_accuracy;
        out["std_accuracy"] = r.std_accuracy;
        out["classes"] = r.classes;
        out["warnings"] = r.warnings;
        return out;
      },
      py::arg("x"), py::arg("labels"), py::arg("task") = py::none(), py::arg("folds") = 5, py::arg("steps") = 500,
      py::arg("learning_rate") = 0.1, py::arg("seed") = 0);

  // Decoder.
  m.def(
      "init_weights",
      [](const std::filesystem::path& path, std::uint64_t seed, const std::string& config_json) {
        const auto config = config_json.empty() ? DecoderConfig{} : decoder_config_from_json(nlohmann::json::parse(config_json));
        write_weights(path, random_weights(config, seed));
      },
      py::arg("path"), py::arg("seed") = 0, py::arg("config_json") = "");

  py::class_<FiltrModel>(m, "FiltrModel")
      .def(py::init([](const std::filesystem::path& weights) { return FiltrModel(read_weights(weights)); }),
           py::arg("weights"))
      .def_property_readonly("config_json", [](const FiltrModel& f) { return to_json(f.config()).dump(); })
      .def(
          "predict",
          [](const FiltrModel& f, const std::vector<Eigen::MatrixXd>& blocks, const Eigen::MatrixXd& centers,
             const std::string& mode) {
            EncoderFeatures features{blocks, centers};
            PredictionSet p;
            {
              py::gil_scoped_release release;
              p = f.predict(features, parse_combine_mode(mode));
            }
            return from_prediction(p);
          },
          py::arg("blocks"), py::arg("centers"), py::arg("mode") = "last");
  m.def(
      "prediction_diagram",
      [](const RowMatrix& pred, std::optional<double> threshold) {
        const auto p = to_prediction(pred);
        return from_diagram(threshold ? prediction_diagram(p, *threshold) : prediction_diagram(p));
      },
      py::arg("pred"), py::arg("threshold") = 0.5);
}

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>

#include "common.hpp"
#include "topo/diagram_metrics.hpp"
#include "topo/donut.hpp"
#include "topo/error.hpp"
#include "topo/features.hpp"
#include "topo/io.hpp"
#include "topo/probe.hpp"
#include "topo/set_prediction.hpp"
#include "topo/similarity.hpp"
#include "topo/vectorize.hpp"

namespace topo::cli {

namespace {

// Rows are samples. Rank-3 tensors are (samples, blocks, width); `block` is
// 1-based and 0 means "flatten everything after the first dimension".
Eigen::MatrixXd feature_matrix(const FeatureTensor& t, int block) {
  if (block == 0) return t.matrix();
  if (t.dims.size() != 3) fail(Errc::invalid_parameter, "--block needs a (samples, blocks, width) tensor");
  if (block < 1 || static_cast<std::uint32_t>(block) > t.dims[1]) {
    fail(Errc::invalid_parameter, "block " + std::to_string(block) + " out of range 1.." + std::to_string(t.dims[1]));
  }
  const std::size_t n = t.dims[0], blocks = t.dims[1], width = t.dims[2];
  Eigen::MatrixXd m(n, width);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t k = 0; k < width; ++k) m(s, k) = t.data[(s * blocks + block - 1) * width + k];
  }
  return m;
}

std::vector<int> load_labels(const std::string& path, const std::string& task) {
  const bool genus = task == "genus";
  if (!genus && task != "beta0" && task != "components") {
    fail(Errc::invalid_parameter, "unknown task '" + task + "' (expected genus or beta0)");
  }
  std::vector<int> labels;
  if (std::filesystem::path(path).extension() == ".json") {
    for (const auto& s : read_manifest(path).samples) labels.push_back(genus ? s.label.genus_total : s.label.beta0);
    return labels;
  }
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::io_error, "empty label file '" + path + "'");
  const auto header = split_csv_line(line);
  const auto it = std::find(header.begin(), header.end(), genus ? "genus" : "beta0");
  if (it == header.end()) fail(Errc::io_error, "label file '" + path + "' has no column for task '" + task + "'");
  const auto col = static_cast<std::size_t>(it - header.begin());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() <= col) fail(Errc::io_error, "short row in '" + path + "'");
    labels.push_back(static_cast<int>(parse_double(fields[col])));
  }
  return labels;
}

ProbeResult run_probe(const Eigen::MatrixXd& x, const std::vector<int>& labels, const std::string& task, int folds,
                      int steps, double lr, std::uint64_t seed, unsigned jobs) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    fail(Errc::invalid_parameter, "features have " + std::to_string(x.rows()) + " rows but there are " +
                                      std::to_string(labels.size()) + " labels");
  }
  auto options = ProbeOptions::for_task(task);
  options.folds = folds;
  options.steps = steps;
  options.learning_rate = lr;
  options.seed = seed;
  options.jobs = static_cast<int>(jobs);
  return train_linear_probe(x, labels, options);
}

void register_pd(CLI::App& app) {
  auto* pd = app.add_subcommand("pd", "distances and images of persistence diagrams");
  pd->require_subcommand(1);

  struct Dist {
    std::vector<std::string> files;
    std::string metric = "w2";
    int dim = 1;
  };
  auto d = std::make_shared<Dist>();
  auto* dist = pd->add_subcommand("dist", "2-Wasserstein or bottleneck distance");
  dist->add_option("files", d->files, "two diagram CSVs")->required()->expected(2);
  dist->add_option("--metric", d->metric, "w2 or bottleneck")
      ->check(CLI::IsMember({"w2", "bottleneck"}))
      ->capture_default_str();
  dist->add_option("--dim", d->dim, "homology dimension")->capture_default_str();
  dist->callback([d] {
    const auto a = read_dim(d->files[0], d->dim), b = read_dim(d->files[1], d->dim);
    print_value(d->metric == "w2" ? wasserstein2(a, b) : bottleneck(a, b));
  });

  struct Image {
    std::string in, out;
    int dim = 1, res = 50;
    double sigma = 0.05;
  };
  auto im = std::make_shared<Image>();
  auto* image = pd->add_subcommand("image", "persistence image on [0,1]^2 (birth x persistence)");
  image->add_option("--in", im->in, "diagram CSV")->required();
  image->add_option("--out", im->out, "image CSV")->required();
  image->add_option("--dim", im->dim, "homology dimension")->capture_default_str();
  image->add_option("--res", im->res, "pixels per side")->capture_default_str();
  image->add_option("--sigma", im->sigma, "Gaussian bandwidth")->capture_default_str();
  image->callback([im] {
    write_image_csv(im->out, persistence_image(read_dim(im->in, im->dim), ImageParams{im->res, im->sigma}));
    write_sidecar(im->out, "pd image", {{"in", im->in}, {"dim", im->dim}, {"res", im->res}, {"sigma", im->sigma}});
  });

  struct Pie {
    std::vector<std::string> files;
    int dim = 1, res = 50;
    double sigma = 0.05;
  };
  auto p = std::make_shared<Pie>();
  auto* pie_cmd = pd->add_subcommand("pie", "persistence image error between two diagrams");
  pie_cmd->add_option("files", p->files, "predicted and true diagram CSVs")->required()->expected(2);
  pie_cmd->add_option("--dim", p->dim, "homology dimension")->capture_default_str();
  pie_cmd->add_option("--res", p->res, "pixels per side")->capture_default_str();
  pie_cmd->add_option("--sigma", p->sigma, "Gaussian bandwidth")->capture_default_str();
  pie_cmd->callback([p] {
    print_value(pie(read_dim(p->files[0], p->dim), read_dim(p->files[1], p->dim), ImageParams{p->res, p->sigma}));
  });
}

void register_align(CLI::App& app) {
  auto* align = app.add_subcommand("align", "diagram vectorizations and representation similarity");
  align->require_subcommand(1);

  struct Vectorize {
    std::vector<std::string> diagrams;
    std::string out, method = "topk", model, save_model;
    int dim = 1;
    std::size_t k = 128, centers = 16;
    std::uint64_t seed = 0;
  };
  auto v = std::make_shared<Vectorize>();
  auto* vectorize = align->add_subcommand("vectorize", "turn a collection of diagrams into an FTN1 matrix");
  vectorize->add_option("--diagrams", v->diagrams, "diagram CSVs or directories of them")->required();
  vectorize->add_option("--out", v->out, "output FTN1 file")->required();
  vectorize->add_option("--method", v->method, "topk or quantized")
      ->check(CLI::IsMember({"topk", "quantized"}))
      ->capture_default_str();
  vectorize->add_option("--dim", v->dim, "homology dimension")->capture_default_str();
  vectorize->add_option("--k", v->k, "pairs kept by topk")->capture_default_str();
  vectorize->add_option("--centers", v->centers, "centres for quantized")->capture_default_str();
  vectorize->add_option("--seed", v->seed, "k-means seed")->capture_default_str();
  vectorize->add_option("--model", v->model, "reuse fitted centres from this JSON file");
  vectorize->add_option("--save-model", v->save_model, "write the fitted centres as JSON");
  vectorize->callback([v] {
    const auto files = expand_csv_inputs(v->diagrams);
    if (files.empty()) fail(Errc::invalid_parameter, "no diagram files given");
    std::vector<PersistenceDiagram> diagrams;
    std::vector<std::string> names;
    for (const auto& f : files) {
      diagrams.push_back(read_dim(f, v->dim));
      names.push_back(f.filename().string());
    }
    nlohmann::json params = {{"method", v->method}, {"dim", v->dim}, {"files", names}};
    Eigen::MatrixXd x;
    if (v->method == "topk") {
      params["k"] = v->k;
      x = topk_vectorize(diagrams, v->k);
    } else {
      QuantizationModel model;
      if (!v->model.empty()) {
        auto in = open_input(v->model);
        model = quantization_model_from_json(nlohmann::json::parse(in));
        params["model"] = v->model;
      } else {
        model = fit_quantization_centers(diagrams, {v->centers, 100, v->seed});
        params["centers"] = v->centers;
        params["seed"] = v->seed;
      }
      if (!v->save_model.empty()) {
        auto out = open_output(v->save_model);
        out << to_json(model).dump(1) << '\n';
      }
      x = quantized_vectorize(diagrams, model);
    }
    auto t = FeatureTensor::from_matrix(x);
    t.meta.encoder = "diagram-" + v->method;
    t.meta.extra = run_record("align vectorize", params);
    write_ftn(v->out, t);
  });

  struct Cka {
    std::string features, vectors;
    int block = 0;
  };
  auto c = std::make_shared<Cka>();
  auto* cka = align->add_subcommand("cka", "linear CKA between two row-aligned FTN1 matrices");
  cka->add_option("--features", c->features, "encoder features")->required();
  cka->add_option("--vectors", c->vectors, "diagram vectorizations")->required();
  cka->add_option("--block", c->block, "1-based block of a (samples, blocks, width) feature tensor");
  cka->callback([c] {
    print_value(linear_cka(feature_matrix(read_ftn(c->features), c->block), read_ftn(c->vectors).matrix()));
  });

  struct Ablate {
    std::string features, vectors, out;
    std::vector<double> alpha{0.5};
    int block = 0, repeats = 3;
    std::uint64_t seed = 0;
  };
  auto a = std::make_shared<Ablate>();
  auto* ablate = align->add_subcommand("ablate", "CKA after permuting a fraction of the feature rows");
  ablate->add_option("--features", a->features, "encoder features")->required();
  ablate->add_option("--vectors", a->vectors, "diagram vectorizations")->required();
  ablate->add_option("--alpha", a->alpha, "permuted fraction(s)")->delimiter(',')->capture_default_str();
  ablate->add_option("--repeats", a->repeats, "permutations averaged per alpha")->capture_default_str();
  ablate->add_option("--seed", a->seed, "permutation seed")->capture_default_str();
  ablate->add_option("--block", a->block, "1-based block of a (samples, blocks, width) feature tensor");
  ablate->add_option("--out", a->out, "also write alpha,mean_cka CSV");
  ablate->callback([a] {
    const auto x = feature_matrix(read_ftn(a->features), a->block);
    const auto y = read_ftn(a->vectors).matrix();
    std::ostringstream csv;
    csv << "alpha,mean_cka\n";
    for (double alpha : a->alpha) {
      const auto r = permutation_ablation(x, y, alpha, a->seed, a->repeats);
      csv << format_double(alpha) << ',' << format_double(r.mean) << '\n';
    }
    std::cout << csv.str();
    if (!a->out.empty()) {
      auto out = open_output(a->out);
      out << csv.str();
      write_sidecar(a->out, "align ablate",
                    {{"features", a->features}, {"vectors", a->vectors}, {"alpha", a->alpha},
                     {"repeats", a->repeats}, {"seed", a->seed}, {"block", a->block}});
    }
  });
}

void register_probe(CLI::App& app) {
  auto* probe = app.add_subcommand("probe", "linear probes on features");
  probe->require_subcommand(1);
  struct Train {
    std::string features, labels, task = "genus", out;
    int block = 0, folds = 5, steps = 500;
    double lr = 0.1;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
  };
  auto t = std::make_shared<Train>();
  auto* train = probe->add_subcommand("train", "cross-validated softmax regression");
  train->add_option("--features", t->features, "FTN1 features, one row per sample")->required();
  train->add_option("--labels", t->labels, "dataset manifest.json or CSV with beta0/genus columns")->required();
  train->add_option("--task", t->task, "genus or beta0")->check(CLI::IsMember({"genus", "beta0"}))->capture_default_str();
  train->add_option("--folds", t->folds, "cross-validation folds")->capture_default_str();
  train->add_option("--steps", t->steps, "gradient steps")->capture_default_str();
  train->add_option("--lr", t->lr, "step size")->capture_default_str();
  train->add_option("--seed", t->seed, "fold assignment seed")->capture_default_str();
  train->add_option("--block", t->block, "1-based block of a (samples, blocks, width) feature tensor");
  train->add_option("--out", t->out, "write the result as JSON");
  add_jobs_option(train, t->jobs);
  train->callback([t] {
    const auto x = feature_matrix(read_ftn(t->features), t->block);
    const auto r = run_probe(x, load_labels(t->labels, t->task), t->task, t->folds, t->steps, t->lr, t->seed, t->jobs);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "mean_accuracy " << format_double(r.mean_accuracy) << '\n';
    for (std::size_t i = 0; i < r.fold_accuracy.size(); ++i) {
      std::cout << "fold " << i << ' ' << format_double(r.fold_accuracy[i]) << '\n';
    }
    if (!t->out.empty()) {
      nlohmann::json j = run_record("probe train", {{"features", t->features},
                                                    {"labels", t->labels},
                                                    {"task", t->task},
                                                    {"folds", t->folds},
                                                    {"steps", t->steps},
                                                    {"lr", t->lr},
                                                    {"seed", t->seed},
                                                    {"block", t->block}});
      j["result"] = {{"mean_accuracy", r.mean_accuracy},
                     {"std_accuracy", r.std_accuracy},
                     {"fold_accuracy", r.fold_accuracy},
                     {"classes", r.classes},
                     {"warnings", r.warnings}};
      auto out = open_output(t->out);
      out << j.dump(1) << '\n';
    }
  });
}

void register_report(CLI::App& app) {
  auto* report = app.add_subcommand("report", "figure data as CSV");
  report->require_subcommand(1);
  struct Plots {
    std::string kind, out, features, vectors, labels, task = "genus", pred, truth;
    std::vector<double> alphas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    int seeds = 10, repeats = 3, folds = 5, steps = 500, dim = 1, block = 0;
    double lr = 0.1;
    std::optional<double> threshold;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
  };
  auto p = std::make_shared<Plots>();
  auto* plots = report->add_subcommand("plots", "probe-per-block, CKA-per-block, CKA-vs-alpha or diagram scatter data");
  plots->add_option("--kind", p->kind, "probe | cka-blocks | cka-alpha | scatter")
      ->required()
      ->check(CLI::IsMember({"probe", "cka-blocks", "cka-alpha", "scatter"}));
  plots->add_option("--out", p->out, "output CSV")->required();
  plots->add_option("--features", p->features, "FTN1 features (probe, cka-*)");
  plots->add_option("--vectors", p->vectors, "FTN1 diagram vectorizations (cka-*)");
  plots->add_option("--labels", p->labels, "manifest.json or label CSV (probe)");
  plots->add_option("--task", p->task, "genus or beta0 (probe)")->capture_default_str();
  plots->add_option("--alphas", p->alphas, "permuted fractions (cka-alpha)")->delimiter(',');
  plots->add_option("--seeds", p->seeds, "seeds averaged per alpha (cka-alpha)")->capture_default_str();
  plots->add_option("--repeats", p->repeats, "permutations per seed (cka-alpha)")->capture_default_str();
  plots->add_option("--block", p->block, "feature block for cka-alpha");
  plots->add_option("--folds", p->folds, "probe folds")->capture_default_str();
  plots->add_option("--steps", p->steps, "probe steps")->capture_default_str();
  plots->add_option("--lr", p->lr, "probe step size")->capture_default_str();
  plots->add_option("--pred", p->pred, "predicted pairs, prediction or diagram CSV (scatter)");
  plots->add_option("--true", p->truth, "true diagram CSV (scatter)");
  plots->add_option("--dim", p->dim, "homology dimension of the true diagram (scatter)")->capture_default_str();
  plots->add_option("--threshold", p->threshold, "existence threshold for predictions (scatter)");
  plots->add_option("--seed", p->seed, "seed")->capture_default_str();
  add_jobs_option(plots, p->jobs);
  plots->callback([p] {
    auto need = [](const std::string& value, const char* flag) {
      if (value.empty()) throw CLI::RequiredError(flag);
    };
    std::ostringstream csv;
    nlohmann::json params = {{"kind", p->kind}, {"seed", p->seed}};
    if (p->kind == "probe" || p->kind == "cka-blocks") {
      need(p->features, "--features");
      const auto t = read_ftn(p->features);
      const int blocks = t.dims.size() == 3 ? static_cast<int>(t.dims[1]) : 1;
      params["features"] = p->features;
      if (p->kind == "probe") {
        need(p->labels, "--labels");
        const auto labels = load_labels(p->labels, p->task);
        csv << "block,mean_accuracy,std_accuracy\n";
        for (int b = 1; b <= blocks; ++b) {
          const auto r = run_probe(feature_matrix(t, t.dims.size() == 3 ? b : 0), labels, p->task,
                                   p->folds, p->steps, p->lr, p->seed, p->jobs);
          csv << b << ',' << format_double(r.mean_accuracy) << ',' << format_double(r.std_accuracy) << '\n';
        }
        params.update({{"labels", p->labels}, {"task", p->task}, {"folds", p->folds}, {"steps", p->steps}, {"lr", p->lr}});
      } else {
        need(p->vectors, "--vectors");
        const auto y = read_ftn(p->vectors).matrix();
        csv << "block,cka\n";
        for (int b = 1; b <= blocks; ++b) {
          csv << b << ',' << format_double(linear_cka(feature_matrix(t, t.dims.size() == 3 ? b : 0), y)) << '\n';
        }
        params["vectors"] = p->vectors;
      }
    } else if (p->kind == "cka-alpha") {
      need(p->features, "--features");
      need(p->vectors, "--vectors");
      const auto x = feature_matrix(read_ftn(p->features), p->block);
      const auto y = read_ftn(p->vectors).matrix();
      csv << "alpha,mean_cka,std_cka\n";
      for (double alpha : p->alphas) {
        std::vector<double> values(static_cast<std::size_t>(p->seeds));
        parallel_for(values.size(), p->jobs, [&](std::size_t s) {
          values[s] = permutation_ablation(x, y, alpha, derive_seed(p->seed, "alpha-seed", s), p->repeats).mean;
        });
        const double m = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        double var = 0;
        for (double v : values) var += (v - m) * (v - m);
        csv << format_double(alpha) << ',' << format_double(m) << ','
            << format_double(std::sqrt(var / static_cast<double>(values.size()))) << '\n';
      }
      params.update({{"features", p->features}, {"vectors", p->vectors}, {"alphas", p->alphas},
                     {"seeds", p->seeds}, {"repeats", p->repeats}, {"block", p->block}});
    } else {
      need(p->pred, "--pred");
      need(p->truth, "--true");
      csv << "source,birth,death,probability\n";
      for (const auto& pair : read_dim(p->truth, p->dim).pairs) {
        csv << "true," << format_double(pair.birth) << ',' << format_double(pair.death) << ",1\n";
      }
      std::ifstream probe_header(p->pred);
      std::string header;
      std::getline(probe_header, header);
      if (header.rfind("birth,death,logit", 0) == 0) {
        for (const auto& q : read_prediction_csv(p->pred)) {
          const double prob = sigmoid(q.logit);
          if (p->threshold && prob < *p->threshold) continue;
          csv << "predicted," << format_double(q.birth) << ',' << format_double(q.death) << ',' << format_double(prob)
              << '\n';
        }
      } else {
        for (const auto& pair : read_dim(p->pred, p->dim).pairs) {
          csv << "predicted," << format_double(pair.birth) << ',' << format_double(pair.death) << ",1\n";
        }
      }
      params.update({{"pred", p->pred}, {"true", p->truth}, {"dim", p->dim}});
      if (p->threshold) params["threshold"] = *p->threshold;
    }
    auto out = open_output(p->out);
    out << csv.str();
    out.close();
    write_sidecar(p->out, "report plots", params);
  });
}

}  // namespace

void register_analysis_commands(CLI::App& app) {
  register_pd(app);
  register_align(app);
  register_probe(app);
  register_report(app);
}

}  // namespace topo::cli

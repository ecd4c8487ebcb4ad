#include <fstream>
#include <iostream>
#include <memory>

#include "common.hpp"
#include "topo/error.hpp"
#include "topo/features.hpp"
#include "topo/filtr.hpp"
#include "topo/io.hpp"
#include "topo/rng.hpp"
#include "topo/set_prediction.hpp"

namespace topo::cli {

namespace {

bool is_prediction_csv(const std::string& path) {
  auto in = open_input(path);
  std::string header;
  std::getline(in, header);
  return header.rfind("birth,death,logit", 0) == 0;
}

void add_loss_weight_options(CLI::App* app, LossWeights& w) {
  app->add_option("--mu-recon", w.mu_recon, "reconstruction loss weight")->capture_default_str();
  app->add_option("--mu-exist", w.mu_exist, "existence loss weight")->capture_default_str();
  app->add_option("--mu-diag", w.mu_diag, "diagonal loss weight")->capture_default_str();
  app->add_option("--lambda-reg", w.lambda_reg, "matching cost weight of the pair distance")->capture_default_str();
  app->add_option("--lambda-exist", w.lambda_exist, "matching cost weight of existence")->capture_default_str();
}

nlohmann::json weights_json(const LossWeights& w) {
  return {{"mu_recon", w.mu_recon},
          {"mu_exist", w.mu_exist},
          {"mu_diag", w.mu_diag},
          {"lambda_reg", w.lambda_reg},
          {"lambda_exist", w.lambda_exist}};
}

void register_loss(CLI::App& app) {
  auto* loss = app.add_subcommand("loss", "set-prediction objective");
  loss->require_subcommand(1);

  struct Eval {
    std::string pred, target, out;
    int dim = 1;
    double logit = 0.0;
    LossWeights weights;
  };
  auto e = std::make_shared<Eval>();
  auto* eval = loss->add_subcommand("eval", "matching and loss terms of predictions against a diagram");
  eval->add_option("--pred", e->pred, "prediction CSV (birth,death,logit) or diagram CSV")->required();
  eval->add_option("--target", e->target, "target diagram CSV")->required();
  eval->add_option("--dim", e->dim, "homology dimension read from diagram CSVs")->capture_default_str();
  eval->add_option("--logit", e->logit, "existence logit given to diagram-CSV predictions")->capture_default_str();
  add_loss_weight_options(eval, e->weights);
  eval->add_option("--out", e->out, "write the breakdown as JSON");
  eval->callback([e] {
    e->weights.validate();
    PredictionSet pred;
    if (is_prediction_csv(e->pred)) {
      pred = read_prediction_csv(e->pred);
    } else {
      for (const auto& p : read_dim(e->pred, e->dim).pairs) pred.push_back({p.birth, p.death, e->logit});
    }
    const auto target = read_dim(e->target, e->dim).pairs;
    const auto r = total_loss(pred, target, e->weights);
    std::cout << "total " << format_double(r.total) << "\nrecon " << format_double(r.recon) << "\nexist "
              << format_double(r.exist) << "\ndiag " << format_double(r.diag) << '\n';
    if (!e->out.empty()) {
      auto j = run_record("loss eval", {{"pred", e->pred},
                                        {"target", e->target},
                                        {"dim", e->dim},
                                        {"logit", e->logit},
                                        {"weights", weights_json(e->weights)}});
      j["result"] = {{"total", r.total}, {"recon", r.recon}, {"exist", r.exist}, {"diag", r.diag},
                     {"assignment", r.assignment.row_to_col}};
      auto out = open_output(e->out);
      out << j.dump(1) << '\n';
    }
  });

  struct GradCheck {
    int instances = 50, max_pairs = 32;
    double h = 1e-5, tol = 1e-4;
    std::uint64_t seed = 0;
    LossWeights weights;
  };
  auto g = std::make_shared<GradCheck>();
  auto* gradcheck = loss->add_subcommand("gradcheck", "analytic gradients against central differences");
  gradcheck->add_option("--instances", g->instances, "random instances")->capture_default_str();
  gradcheck->add_option("--max-pairs", g->max_pairs, "largest prediction set")->capture_default_str();
  gradcheck->add_option("--step", g->h, "finite-difference step")->capture_default_str();
  gradcheck->add_option("--tol", g->tol, "largest accepted relative error")->capture_default_str();
  gradcheck->add_option("--seed", g->seed, "instance seed")->capture_default_str();
  add_loss_weight_options(gradcheck, g->weights);
  gradcheck->callback([g] {
    g->weights.validate();
    require(g->max_pairs >= 1, "--max-pairs must be positive");
    double worst = 0.0;
    std::size_t coordinates = 0;
    for (int t = 0; t < g->instances; ++t) {
      Rng rng(derive_seed(g->seed, "gradcheck", static_cast<std::uint64_t>(t)));
      const auto n = rng.uniform_int(1, g->max_pairs);
      const auto m = rng.uniform_int(0, n);
      PredictionSet pred;
      for (std::int64_t i = 0; i < n; ++i) {
        const double b = rng.uniform(0.0, 1.0);
        pred.push_back({b, b + rng.uniform(0.01, 0.5), rng.uniform(-3.0, 3.0)});
      }
      std::vector<PersistencePair> target;
      for (std::int64_t i = 0; i < m; ++i) {
        const double b = rng.uniform(0.0, 1.0);
        target.push_back({b, b + rng.uniform(0.01, 0.5), false});
      }
      const auto r = check_gradients(pred, target, g->weights, g->h);
      worst = std::max(worst, r.worst_relative_error);
      coordinates += r.coordinates;
    }
    std::cout << "coordinates " << coordinates << "\nworst_relative_error " << format_double(worst) << '\n';
    if (!(worst < g->tol)) fail(Errc::numeric_overflow, "gradient check failed: worst relative error above tolerance");
  });
}

void register_filtr(CLI::App& app) {
  auto* filtr = app.add_subcommand("filtr", "persistence diagram prediction from encoder features");
  filtr->require_subcommand(1);

  struct Init {
    std::string out, norm = "post";
    std::uint64_t seed = 0;
    DecoderConfig config;
    bool zero = false;
  };
  auto i = std::make_shared<Init>();
  auto* init = filtr->add_subcommand("init-weights", "write a random (or zero) weight manifest");
  init->add_option("--out", i->out, "manifest path; the payload goes next to it as .bin")->required();
  init->add_option("--seed", i->seed, "weight seed")->capture_default_str();
  init->add_option("--queries", i->config.num_queries, "learned queries")->capture_default_str();
  init->add_option("--layers", i->config.layers, "decoder blocks")->capture_default_str();
  init->add_option("--heads", i->config.heads, "attention heads")->capture_default_str();
  init->add_option("--model-dim", i->config.model_dim, "decoder width")->capture_default_str();
  init->add_option("--feature-dim", i->config.feature_dim, "encoder token width")->capture_default_str();
  init->add_option("--ffn-dim", i->config.ffn_dim, "feed-forward width")->capture_default_str();
  init->add_option("--norm", i->norm, "post or pre")->check(CLI::IsMember({"post", "pre"}))->capture_default_str();
  init->add_flag("--zero", i->zero, "zero linear maps and identity norms");
  init->callback([i] {
    auto config = i->config;
    config.norm = parse_norm_placement(i->norm);
    write_weights(i->out, i->zero ? zero_weights(config, i->seed) : random_weights(config, i->seed));
  });

  struct Synth {
    std::string out;
    std::uint32_t blocks = 12, tokens = 64, width = 384;
    std::uint64_t seed = 0;
  };
  auto sy = std::make_shared<Synth>();
  auto* synth = filtr->add_subcommand("synth-features", "random stand-in encoder features with patch centres");
  synth->add_option("--out", sy->out, "features file; centres go to <stem>.centers.ftn")->required();
  synth->add_option("--blocks", sy->blocks, "1 or 12")->check(CLI::IsMember({1, 12}))->capture_default_str();
  synth->add_option("--tokens", sy->tokens, "patches")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--width", sy->width, "token width")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--seed", sy->seed, "seed")->capture_default_str();
  synth->callback([sy] {
    const std::filesystem::path out(sy->out);
    Rng rng(derive_seed(sy->seed, "features"));
    FeatureTensor f;
    f.dims = {sy->blocks, sy->tokens, sy->width};
    f.data.resize(f.size());
    for (auto& v : f.data) v = static_cast<float>(rng.normal());
    FeatureTensor c;
    c.dims = {sy->tokens, 3};
    c.data.resize(c.size());
    for (auto& v : c.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    const auto centre_name = out.stem().string() + ".centers.ftn";
    f.meta.encoder = "synthetic";
    f.meta.pooling = "none";
    f.meta.centers = centre_name;
    f.meta.extra = run_record("filtr synth-features", {{"seed", sy->seed}});
    write_ftn(out, f);
    c.meta.encoder = "synthetic";
    c.meta.extra = f.meta.extra;
    write_ftn(out.parent_path() / centre_name, c);
  });

  struct Infer {
    std::vector<std::string> features;
    std::string centers, weights, mode = "last", out, raw;
    double threshold = 0.5;
    bool no_threshold = false;
    unsigned jobs = 1;
  };
  auto f = std::make_shared<Infer>();
  auto* infer = filtr->add_subcommand("infer", "predict H1 diagrams from FTN1 encoder features");
  infer->add_option("--features", f->features, "FTN1 features (n,d) or (12,n,d); several allowed")->required();
  infer->add_option("--centers", f->centers, "FTN1 patch centres (n,3), if not named in the feature metadata");
  infer->add_option("--weights", f->weights, "weight manifest")->required();
  infer->add_option("--mode", f->mode, "last or combined")->check(CLI::IsMember({"last", "combined"}))->capture_default_str();
  auto* thr = infer->add_option("--threshold", f->threshold, "existence probability threshold")->capture_default_str();
  infer->add_flag("--no-threshold", f->no_threshold, "keep all query outputs")->excludes(thr);
  infer->add_option("--out", f->out, "diagram CSV, or a directory when several features are given")->required();
  infer->add_option("--raw", f->raw, "also write birth,death,logit for a single input");
  add_jobs_option(infer, f->jobs);
  infer->callback([f] {
    const FiltrModel model(read_weights(f->weights));
    const auto mode = parse_combine_mode(f->mode);
    const std::optional<double> threshold = f->no_threshold ? std::nullopt : std::optional(f->threshold);
    std::optional<std::filesystem::path> centers;
    if (!f->centers.empty()) centers = f->centers;
    nlohmann::json params = {{"weights", f->weights}, {"mode", f->mode}, {"features", f->features}};
    params["threshold"] = threshold ? nlohmann::json(*threshold) : nlohmann::json(nullptr);

    if (f->features.size() == 1) {
      const auto features = load_encoder_features(f->features[0], centers);
      const auto pred = model.predict(features, mode);
      const auto diagram = threshold ? prediction_diagram(pred, *threshold) : prediction_diagram(pred);
      write_diagram_csv(f->out, std::span(&diagram, 1));
      write_sidecar(f->out, "filtr infer", params);
      if (!f->raw.empty()) write_prediction_csv(f->raw, pred);
      std::cout << diagram.pairs.size() << " pairs\n";
      return;
    }
    if (!f->raw.empty()) throw CLI::ValidationError("--raw", "only available for a single input");
    std::vector<EncoderFeatures> samples(f->features.size());
    parallel_for(samples.size(), f->jobs, [&](std::size_t k) { samples[k] = load_encoder_features(f->features[k], centers); });
    const auto diagrams = predict_batch(samples, model, mode, threshold, f->jobs);
    const std::filesystem::path dir(f->out);
    for (std::size_t k = 0; k < diagrams.size(); ++k) {
      const auto name = std::filesystem::path(f->features[k]).stem().string() + ".csv";
      write_diagram_csv(dir / name, std::span(&diagrams[k], 1));
    }
    write_run_file(dir, "filtr infer", params);
  });

  struct Eval {
    std::string pred, truth, out;
    int dim = 1, res = 50;
    double sigma = 0.05;
  };
  auto e = std::make_shared<Eval>();
  auto* eval = filtr->add_subcommand("eval", "mean W2, bottleneck and PIE over matching file names");
  eval->add_option("--pred", e->pred, "directory of predicted diagram CSVs")->required();
  eval->add_option("--true", e->truth, "directory of true diagram CSVs")->required();
  eval->add_option("--pie-res", e->res, "persistence image resolution")->capture_default_str();
  eval->add_option("--pie-sigma", e->sigma, "persistence image bandwidth")->capture_default_str();
  eval->add_option("--dim", e->dim, "homology dimension")->capture_default_str();
  eval->add_option("--out", e->out, "per-sample CSV table");
  eval->callback([e] {
    const auto pred_files = expand_csv_inputs({e->pred});
    const auto true_files = expand_csv_inputs({e->truth});
    if (pred_files.size() != true_files.size()) {
      fail(Errc::invalid_parameter, "found " + std::to_string(pred_files.size()) + " predicted and " +
                                        std::to_string(true_files.size()) + " true diagrams");
    }
    std::vector<PersistenceDiagram> pred, truth;
    std::vector<std::string> names;
    for (const auto& p : pred_files) {
      const auto t = std::filesystem::path(e->truth) / p.filename();
      if (!std::filesystem::exists(t)) fail(Errc::invalid_parameter, "no true diagram for '" + p.filename().string() + "'");
      pred.push_back(read_dim(p, e->dim));
      truth.push_back(read_dim(t, e->dim));
      names.push_back(p.stem().string());
    }
    const auto report = evaluate(pred, truth, ImageParams{e->res, e->sigma}, names);
    std::cout << "w2 " << format_double(report.mean_w2) << "\nbottleneck " << format_double(report.mean_bottleneck)
              << "\npie " << format_double(report.mean_pie) << '\n';
    if (!e->out.empty()) {
      write_evaluation_csv(e->out, report);
      write_sidecar(e->out, "filtr eval",
                    {{"pred", e->pred}, {"true", e->truth}, {"dim", e->dim}, {"pie_res", e->res}, {"pie_sigma", e->sigma}});
    }
  });
}

}  // namespace

void register_model_commands(CLI::App& app) {
  register_loss(app);
  register_filtr(app);
}

}  // namespace topo::cli

// Command-line front end: one subcommand per pipeline stage plus the full
// experiment runner.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kiae/csv.hpp"
#include "kiae/error.hpp"
#include "kiae/eval.hpp"
#include "kiae/experiment.hpp"
#include "kiae/knowledge.hpp"
#include "kiae/model.hpp"

namespace {

using namespace kiae;

struct DataArgs {
  std::string data;
  std::string synthetic;
  std::string label_column;
  std::string id_column;
};

void add_data_options(CLI::App* app, DataArgs& a) {
  auto* d = app->add_option("--data", a.data, "CSV dataset (header row required)");
  auto* s = app->add_option("--synthetic", a.synthetic,
                            "synthetic profile: economics_like, physics_like, biology_like");
  d->excludes(s);
  app->add_option("--label-column", a.label_column, "label column (default: 'label' if present)");
  app->add_option("--id-column", a.id_column, "sample id column (default: 'id' if present)");
}

Dataset load_data(const DataArgs& a, std::uint64_t seed) {
  if (!a.synthetic.empty()) {
    DatasetSource src;
    src.profile = parse_profile(a.synthetic);
    return load_source(src, seed);
  }
  if (a.data.empty()) throw ConfigError("one of --data or --synthetic is required");
  auto header = csv::split_line(csv::read_lines(a.data).at(0));
  CsvOptions opts;
  auto has = [&](const std::string& c) {
    return std::find(header.begin(), header.end(), c) != header.end();
  };
  if (!a.label_column.empty()) opts.label_column = a.label_column;
  else if (has("label")) opts.label_column = "label";
  if (!a.id_column.empty()) opts.id_column = a.id_column;
  else if (has("id")) opts.id_column = "id";
  return load_csv(a.data, opts);
}

std::uint64_t seed_or_entropy(const std::optional<std::uint64_t>& seed) {
  return seed ? *seed : entropy_seed();
}

struct ModelArgs {
  std::string config;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> repr_dim;
  std::optional<std::size_t> batch_size;
  std::optional<double> omega1;
  std::optional<double> learning_rate;
  std::string repr_activation;
};

void add_model_options(CLI::App* app, ModelArgs& m) {
  app->add_option("--config", m.config, "config file; its [model] section sets hyperparameters");
  app->add_option("--epochs", m.epochs, "training epochs (default 10)");
  app->add_option("--repr-dim", m.repr_dim, "latent dimension r (default 2)");
  app->add_option("--batch-size", m.batch_size, "minibatch size (default 16)");
  app->add_option("--omega1", m.omega1, "reconstruction weight; omega2 = 1 - omega1 (default 0.5)")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--learning-rate", m.learning_rate, "Adam step size (default 0.001)");
  app->add_option("--repr-activation", m.repr_activation, "relu or identity (default relu)");
}

KiaeConfig model_config(const ModelArgs& m) {
  KiaeConfig c;
  if (!m.config.empty()) c = parse_model_config(m.config);
  if (m.epochs) c.epochs = *m.epochs;
  if (m.repr_dim) c.repr_dim = *m.repr_dim;
  if (m.batch_size) c.batch_size = *m.batch_size;
  if (m.omega1) {
    c.omega1 = *m.omega1;
    c.omega2 = 1.0 - *m.omega1;
  }
  if (m.learning_rate) c.learning_rate = *m.learning_rate;
  if (!m.repr_activation.empty()) c.repr_activation = parse_repr_activation(m.repr_activation);
  return c;
}

void print_matrix_row(std::ostream& out, std::span<const double> row) {
  for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv::format_double(row[i]);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-integrated autoencoder toolkit"};
  app.require_subcommand(1);
  app.footer(config_reference());

  std::optional<std::uint64_t> seed;
  std::string out;

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic labelled dataset");
  std::string profile;
  std::optional<std::size_t> gen_n, gen_d, gen_k;
  std::optional<double> gen_sep;
  gen->add_option("--synthetic", profile, "economics_like, physics_like or biology_like")->required();
  gen->add_option("--n", gen_n, "sample count (default: profile)");
  gen->add_option("--d", gen_d, "feature count (default: profile)");
  gen->add_option("--classes", gen_k, "class count (default: profile)");
  gen->add_option("--separation", gen_sep, "distance between class means (default: profile)");
  gen->add_option("--seed", seed, "RNG seed");
  gen->add_option("--out", out, "output CSV")->required();

  // knowledge
  auto* know = app.add_subcommand("knowledge", "build, complete or corrupt a knowledge matrix");
  know->require_subcommand(1);
  DataArgs know_data;
  double alpha1 = 0.0, alpha2 = 1.0, gamma = 1.0, known_fraction = 1.0;
  std::vector<std::string> gamma_pairs;
  auto* kb = know->add_subcommand("build", "distances drawn from class labels");
  add_data_options(kb, know_data);
  kb->add_option("--alpha1", alpha1, "lower same-class bound (default 0)");
  kb->add_option("--alpha2", alpha2, "upper same-class bound (default 1)");
  kb->add_option("--gamma", gamma, "cross-class base offset (default 1)");
  kb->add_option("--gamma-pair", gamma_pairs, "override as x,y,value (0-based classes)");
  kb->add_option("--known-fraction", known_fraction, "share of pairs kept, rest left empty")
      ->check(CLI::Range(0.0, 1.0));
  kb->add_option("--seed", seed, "RNG seed");
  kb->add_option("--out", out, "output matrix CSV")->required();

  std::string knowledge_path;
  std::size_t neighbors = 5;
  auto* kf = know->add_subcommand("fill", "complete missing entries with k-NN regression");
  add_data_options(kf, know_data);
  kf->add_option("--knowledge", knowledge_path, "partial matrix CSV")->required();
  kf->add_option("--neighbors", neighbors, "k of the regressor (default 5)");
  kf->add_option("--out", out, "output matrix CSV")->required();

  std::optional<std::size_t> noisy_n;
  auto* kc = know->add_subcommand("corrupt", "uniform random matrix in [0, 1)");
  kc->add_option("--n", noisy_n, "matrix size")->required();
  kc->add_option("--seed", seed, "RNG seed");
  kc->add_option("--out", out, "output matrix CSV")->required();

  // train
  auto* tr = app.add_subcommand("train", "train a model and save a checkpoint");
  DataArgs train_data;
  ModelArgs model_args;
  add_data_options(tr, train_data);
  add_model_options(tr, model_args);
  tr->add_option("--knowledge", knowledge_path, "knowledge matrix CSV (default: none known)");
  tr->add_option("--seed", seed, "RNG seed");
  tr->add_option("--out", out, "checkpoint path")->required();

  // encode
  std::string model_path;
  auto* enc = app.add_subcommand("encode", "write latent vectors for a dataset");
  DataArgs enc_data;
  add_data_options(enc, enc_data);
  enc->add_option("--model", model_path, "checkpoint")->required();
  enc->add_option("--seed", seed, "seed for --synthetic data");
  enc->add_option("--out", out, "embedding CSV")->required();

  // evaluate
  std::string embedding_path;
  std::optional<std::size_t> clusters;
  auto* ev = app.add_subcommand("evaluate", "Ward-cluster an embedding and score it");
  ev->add_option("--embedding", embedding_path, "embedding CSV with a label column")->required();
  ev->add_option("--clusters", clusters, "cluster count (default: label classes)");
  ev->add_option("--out", out, "optional centroid table CSV");

  // experiment
  auto* ex = app.add_subcommand("experiment", "compare ae, kiae and noisy_kiae");
  std::string config_path;
  std::vector<std::string> variants;
  DataArgs ex_data;
  ex->add_option("--config", config_path, "experiment config file");
  ex->add_option("--seed", seed, "master seed (overrides config)");
  ex->add_option("--out", out, "output directory (overrides config)");
  ex->add_option("--variant", variants, "ae, kiae or noisy_kiae; repeatable (overrides config)");
  add_data_options(ex, ex_data);

  // plot
  std::size_t points = 90;
  auto* pl = app.add_subcommand("plot", "PCA scatter of a set-cover subsample");
  pl->add_option("--embedding", embedding_path, "embedding CSV with a label column")->required();
  pl->add_option("--clusters", clusters, "cluster count (default: label classes)");
  pl->add_option("--points", points, "subsample size (default 90)");
  pl->add_option("--out", out, "SVG path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto p = parse_profile(profile);
      auto def = profile_defaults(p);
      Rng rng(seed_or_entropy(seed));
      auto ds = generate_synthetic(p, gen_n.value_or(def.n), gen_d.value_or(def.d),
                                   gen_k.value_or(def.k), gen_sep.value_or(def.separation), rng);
      write_csv(ds, out, true);
      return 0;
    }

    if (know->parsed()) {
      if (kb->parsed()) {
        auto ds = load_data(know_data, 0);
        GammaTable g = GammaTable::uniform(ds.num_classes, gamma);
        g.alpha1 = alpha1;
        g.alpha2 = alpha2;
        for (const auto& spec : gamma_pairs) {
          auto parts = csv::split_line(spec);
          if (parts.size() != 3) throw ConfigError("--gamma-pair expects x,y,value, got " + spec);
          auto x = csv::parse_double(parts[0]), y = csv::parse_double(parts[1]);
          auto v = csv::parse_double(parts[2]);
          if (!x || !y || !v) throw ConfigError("--gamma-pair expects numbers, got " + spec);
          g.set(static_cast<std::size_t>(*x), static_cast<std::size_t>(*y), *v);
        }
        Rng rng(seed_or_entropy(seed));
        auto mt = build_from_labels(ds, g, rng);
        if (known_fraction < 1.0)
          for (std::size_t i = 0; i < mt.size(); ++i)
            for (std::size_t j = i + 1; j < mt.size(); ++j)
              if (!(rng.next_unit() < known_fraction)) mt.clear(i, j);
        write_knowledge_csv(mt, out);
      } else if (kf->parsed()) {
        auto ds = load_data(know_data, 0);
        auto mt = load_knowledge_csv(knowledge_path);
        write_knowledge_csv(fill_missing_dr(mt, ds, default_pair_metrics(), neighbors), out);
      } else {
        Rng rng(seed_or_entropy(seed));
        write_knowledge_csv(corrupt_noisy(*noisy_n, rng), out);
      }
      return 0;
    }

    if (tr->parsed()) {
      const std::uint64_t s = seed_or_entropy(seed);
      auto ds = load_data(train_data, s);
      auto config = model_config(model_args);
      config.input_dim = ds.dim();
      config.seed = s;
      auto mt = knowledge_path.empty() ? KnowledgeMatrix(ds.size()) : load_knowledge_csv(knowledge_path);
      const auto level = log_level_from_env();
      auto result = train(config, ds, mt, [&](std::size_t epoch, double loss_value) {
        if (level != LogLevel::quiet)
          std::cerr << "epoch=" << epoch << " loss=" << csv::format_double(loss_value) << '\n';
      });
      save_checkpoint(result.model, out);
      return 0;
    }

    if (enc->parsed()) {
      auto model = load_checkpoint(model_path);
      auto ds = load_data(enc_data, seed_or_entropy(seed));
      write_embedding_csv(encode(model, ds), ds, out);
      return 0;
    }

    if (ev->parsed() || pl->parsed()) {
      auto z = load_embedding_csv(embedding_path);
      if (!z.has_labels()) throw DomainError(embedding_path + ": a label column is required");
      const std::size_t k = clusters.value_or(z.num_classes);
      auto assignment = ward_cluster(z.samples, k);
      auto report = centroid_report(z.samples, assignment.cluster, k);
      if (ev->parsed()) {
        auto score = misclassification(assignment.cluster, z.labels, k);
        std::cout << "misclassification=" << csv::format_double(score.rate) << " errors="
                  << score.errors << " samples=" << z.size() << '\n';
        for (std::size_t c = 0; c < k; ++c) {
          std::cout << "cluster " << c << " -> " << z.label_names[static_cast<std::size_t>(score.best_map[c])]
                    << " centroid=";
          print_matrix_row(std::cout, report.centroids.row(c));
          std::cout << " distances=";
          print_matrix_row(std::cout, report.distances.row(c));
          std::cout << '\n';
        }
        if (!out.empty()) {
          std::ofstream f(out);
          if (!f) throw IoError("cannot write '" + out + "'");
          f << "cluster";
          for (std::size_t c = 0; c < report.centroids.cols(); ++c) f << ",z" << c;
          for (std::size_t c = 0; c < k; ++c) f << ",dist_" << c;
          f << '\n';
          for (std::size_t c = 0; c < k; ++c) {
            f << c << ',';
            print_matrix_row(f, report.centroids.row(c));
            f << ',';
            print_matrix_row(f, report.distances.row(c));
            f << '\n';
          }
        }
        return 0;
      }
      const std::size_t comps = std::min<std::size_t>({2, z.dim(), z.size()});
      auto pca = pca_fit(z.samples, comps);
      auto chosen = setcover_subsample(z.samples, std::min(points, z.size()));
      auto picked = z.select(chosen);
      std::vector<int> pred;
      for (auto i : chosen) pred.push_back(assignment.cluster[i]);
      auto plane = [&](const Matrix& m) {
        Matrix p = pca_transform(pca, m), r(m.rows(), 2);
        for (std::size_t i = 0; i < m.rows(); ++i)
          for (std::size_t c = 0; c < comps; ++c) r(i, c) = p(i, c);
        return r;
      };
      emit_scatter(plane(picked.samples), pred, picked.labels, plane(report.centroids),
                   report.distances, out);
      return 0;
    }

    // experiment
    ExperimentSpec spec;
    if (!config_path.empty()) {
      spec = parse_config(config_path);
    } else {
      if (ex_data.data.empty() && ex_data.synthetic.empty())
        throw ConfigError("experiment needs --config, --data or --synthetic");
      spec.variants = {Variant::ae, Variant::kiae, Variant::noisy_kiae};
    }
    if (!ex_data.synthetic.empty()) {
      spec.dataset = {};
      spec.dataset.profile = parse_profile(ex_data.synthetic);
      spec.name = ex_data.synthetic;
    } else if (!ex_data.data.empty()) {
      spec.dataset = {};
      spec.dataset.csv_path = ex_data.data;
      spec.dataset.csv.label_column = ex_data.label_column.empty() ? "label" : ex_data.label_column;
      if (!ex_data.id_column.empty()) spec.dataset.csv.id_column = ex_data.id_column;
      spec.name = std::filesystem::path(ex_data.data).stem().string();
    }
    if (seed) spec.seed = seed;
    if (!out.empty()) spec.out_dir = out;
    if (!variants.empty()) {
      spec.variants.clear();
      for (const auto& v : variants) spec.variants.push_back(parse_variant(v));
    }
    auto result = run_experiment(spec);
    for (const auto& o : result.outcomes)
      if (!o.completed) std::cerr << "variant " << to_string(o.variant) << " failed: " << o.error << '\n';
    return result.all_completed() ? 0 : 2;
  } catch (const kiae::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

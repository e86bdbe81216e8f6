#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kiae/csv.hpp"
#include "kiae/error.hpp"
#include "kiae/eval.hpp"
#include "kiae/experiment.hpp"

namespace kiae {

bool ExperimentResult::all_completed() const {
  for (const auto& o : outcomes)
    if (!o.completed) return false;
  return !outcomes.empty();
}

LogLevel log_level_from_env() {
  const char* v = std::getenv("KIAE_LOG");
  if (!v) return LogLevel::info;
  std::string s(v);
  if (s == "quiet" || s == "0") return LogLevel::quiet;
  if (s == "debug" || s == "2") return LogLevel::debug;
  return LogLevel::info;
}

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "dataset,variant,split,misclassification\n";
  for (const auto& r : rows)
    out << r.dataset << ',' << r.variant << ',' << r.split << ','
        << csv::format_double(r.misclassification) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_embedding_csv(const LatentEmbedding& z, const Dataset& ds, const std::string& path) {
  if (z.vectors.rows() != ds.size())
    throw ShapeError("write_embedding_csv: embedding and dataset sizes differ");
  Dataset out;
  out.samples = z.vectors;
  out.sample_ids = z.sample_ids;
  out.labels = ds.labels;
  out.num_classes = ds.num_classes;
  out.label_names = ds.label_names;
  for (std::size_t c = 0; c < z.vectors.cols(); ++c) out.feature_names.push_back("z" + std::to_string(c));
  out.feature_kinds.assign(z.vectors.cols(), FeatureKind::continuous);
  write_csv(out, path, true);
}

Dataset load_embedding_csv(const std::string& path) {
  auto lines = csv::read_lines(path);
  if (lines.empty()) throw FormatError(path + ": empty file");
  auto header = csv::split_line(lines.front());
  CsvOptions opts;
  for (const auto& h : header) {
    if (h == "id") opts.id_column = "id";
    if (h == "label") opts.label_column = "label";
  }
  return load_csv(path, opts);
}

namespace {

class RunLog {
 public:
  RunLog(const std::string& path, LogLevel level) : file_(path, std::ios::binary), level_(level) {
    if (!file_) throw IoError("cannot write '" + path + "'");
  }
  // Stage messages go to stderr at info; epoch lines only at debug.
  void stage(const std::string& line) {
    file_ << line << '\n';
    file_.flush();
    if (level_ != LogLevel::quiet) std::cerr << line << '\n';
  }
  void epoch(const std::string& line) {
    file_ << line << '\n';
    if (level_ == LogLevel::debug) std::cerr << line << '\n';
  }

 private:
  std::ofstream file_;
  LogLevel level_;
};

struct Scored {
  KiaeModel model;
  double misclassification;
};

class Runner {
 public:
  Runner(const ExperimentSpec& spec, const Dataset& ds, std::uint64_t seed, RunLog& log)
      : spec_(spec), ds_(ds), seed_(seed), log_(log) {}

  KiaeConfig config_for(Variant v) const {
    KiaeConfig c = spec_.model;
    c.input_dim = ds_.dim();
    // One seed for every variant: identical initial parameters and batch order.
    c.seed = seed_;
    if (v == Variant::ae) {
      c.omega1 = 1.0;
      c.omega2 = 0.0;
    }
    c.validate();
    return c;
  }

  KnowledgeMatrix knowledge_for(Variant v, const Dataset& train, std::uint64_t stream) const {
    Rng rng(derive_seed(seed_, stream));
    if (v == Variant::ae) return KnowledgeMatrix(train.size());
    if (v == Variant::noisy_kiae) return corrupt_noisy(train.size(), rng);
    auto mt = build_from_labels(train, spec_.gamma_table(ds_.num_classes), rng);
    if (spec_.known_fraction < 1.0) {
      for (std::size_t i = 0; i < mt.size(); ++i)
        for (std::size_t j = i + 1; j < mt.size(); ++j)
          if (!(rng.next_unit() < spec_.known_fraction)) mt.clear(i, j);
      mt = fill_missing_dr(mt, train, default_pair_metrics(), spec_.dr_neighbors);
    }
    return mt;
  }

  Scored train_and_score(Variant v, const std::vector<std::size_t>& train_pos,
                         const std::vector<std::size_t>& eval_pos, const std::string& tag,
                         std::uint64_t stream) const {
    Dataset train_ds = ds_.select(train_pos);
    Dataset eval_ds = ds_.select(eval_pos);
    auto config = config_for(v);
    auto mt = knowledge_for(v, train_ds, stream);
    const std::string prefix = "variant=" + to_string(v) + " " + tag;
    auto result = train(config, train_ds, mt, [&](std::size_t epoch, double loss_value) {
      log_.epoch(prefix + " epoch=" + std::to_string(epoch) + " loss=" +
                 csv::format_double(loss_value));
    });
    Matrix z = encode(result.model, eval_ds.samples);
    auto clusters = ward_cluster(z, ds_.num_classes);
    auto score = misclassification(clusters.cluster, eval_ds.labels, ds_.num_classes);
    return {std::move(result.model), score.rate};
  }

  std::vector<ResultRow> run_variant(Variant v, std::optional<KiaeModel>& report_model) const {
    std::vector<ResultRow> rows;
    const auto parts = split(ds_, SplitSpec{SplitMode::train_test, spec_.train_fraction,
                                            spec_.folds, derive_seed(seed_, 12)});
    std::vector<std::size_t> everything(ds_.size());
    for (std::size_t i = 0; i < everything.size(); ++i) everything[i] = i;
    // Knowledge draws use streams keyed by variant and split, never by position
    // in the request, so a variant run alone reproduces its grouped result.
    const std::uint64_t base = 1000 + 100 * static_cast<std::uint64_t>(v);

    std::optional<KiaeModel> fit_model, test_model, fold_model;
    for (SplitTag tag : spec_.splits) {
      double rate = 0.0;
      if (tag == SplitTag::fit) {
        auto s = train_and_score(v, everything, everything, "split=fit", base);
        rate = s.misclassification;
        fit_model = std::move(s.model);
      } else if (tag == SplitTag::test) {
        auto s = train_and_score(v, parts.train, parts.test, "split=test", base + 1);
        rate = s.misclassification;
        test_model = std::move(s.model);
      } else {
        double sum = 0.0;
        for (std::size_t f = 0; f < parts.folds.size(); ++f) {
          auto s = train_and_score(v, parts.folds[f].train, parts.folds[f].validation,
                                   "split=train fold=" + std::to_string(f + 1), base + 2 + f);
          log_.stage("variant=" + to_string(v) + " split=train fold=" + std::to_string(f + 1) +
                     " misclassification=" + csv::format_double(s.misclassification));
          sum += s.misclassification;
          if (!fold_model) fold_model = std::move(s.model);
        }
        rate = sum / static_cast<double>(parts.folds.size());
      }
      log_.stage("variant=" + to_string(v) + " split=" + to_string(tag) +
                 " misclassification=" + csv::format_double(rate));
      rows.push_back({spec_.name, to_string(v), to_string(tag), rate});
    }
    if (fit_model) report_model = std::move(fit_model);
    else if (test_model) report_model = std::move(test_model);
    else report_model = std::move(fold_model);
    return rows;
  }

  void emit_artifacts(Variant v, const KiaeModel& model) const {
    namespace fs = std::filesystem;
    const fs::path dir(spec_.out_dir);
    const std::string name = to_string(v);
    auto z = encode(model, ds_);
    write_embedding_csv(z, ds_, (dir / ("embedding_" + name + ".csv")).string());

    const std::size_t k = ds_.num_classes;
    auto clusters = ward_cluster(z.vectors, k);
    auto score = misclassification(clusters.cluster, ds_.labels, k);
    auto report = centroid_report(z.vectors, clusters.cluster, k);
    {
      std::ofstream out(dir / ("centroids_" + name + ".csv"), std::ios::binary);
      if (!out) throw IoError("cannot write centroids for variant " + name);
      out << "cluster,label";
      for (std::size_t c = 0; c < report.centroids.cols(); ++c) out << ",z" << c;
      for (std::size_t c = 0; c < k; ++c) out << ",dist_" << c;
      out << '\n';
      for (std::size_t c = 0; c < k; ++c) {
        out << c << ',' << ds_.label_names[static_cast<std::size_t>(score.best_map[c])];
        for (double v2 : report.centroids.row(c)) out << ',' << csv::format_double(v2);
        for (double d : report.distances.row(c)) out << ',' << csv::format_double(d);
        out << '\n';
      }
    }

    const std::size_t n = ds_.size();
    const std::size_t comps = std::min<std::size_t>({2, z.vectors.cols(), n});
    auto pca = pca_fit(z.vectors, comps);
    auto chosen = setcover_subsample(z.vectors, std::min(spec_.plot_points, n));
    Matrix picked(chosen.size(), z.vectors.cols());
    std::vector<int> pred, truth;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      auto src = z.vectors.row(chosen[i]);
      std::copy(src.begin(), src.end(), picked.row(i).begin());
      pred.push_back(clusters.cluster[chosen[i]]);
      truth.push_back(ds_.labels[chosen[i]]);
    }
    auto to_plane = [&](const Matrix& m) {
      Matrix p = pca_transform(pca, m);
      Matrix out(m.rows(), 2);
      for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t c = 0; c < comps; ++c) out(i, c) = p(i, c);
      return out;
    };
    emit_scatter(to_plane(picked), pred, truth, to_plane(report.centroids), report.distances,
                 (dir / ("scatter_" + name + ".svg")).string());
  }

 private:
  const ExperimentSpec& spec_;
  const Dataset& ds_;
  std::uint64_t seed_;
  RunLog& log_;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(spec.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + spec.out_dir + "': " + ec.message());
  if (spec.dataset.csv_path && !fs::exists(*spec.dataset.csv_path))
    throw IoError("dataset file '" + *spec.dataset.csv_path + "' does not exist");

  const std::uint64_t seed = spec.seed ? *spec.seed : entropy_seed();
  RunLog log((fs::path(spec.out_dir) / "run.log").string(), log_level_from_env());
  log.stage("seed=" + std::to_string(seed) + " dataset=" + spec.name);

  Dataset ds = load_source(spec.dataset, seed);
  ds.validate();
  if (!ds.has_labels() || ds.num_classes < 2)
    throw DomainError("experiment: dataset needs labels with at least 2 classes");
  spec.gamma_table(ds.num_classes);  // reject bad overrides before training
  log.stage("samples=" + std::to_string(ds.size()) + " features=" + std::to_string(ds.dim()) +
            " classes=" + std::to_string(ds.num_classes));

  Runner runner(spec, ds, seed, log);
  ExperimentResult result;
  for (Variant v : spec.variants) {
    VariantOutcome outcome{v, false, {}};
    try {
      std::optional<KiaeModel> report_model;
      auto rows = runner.run_variant(v, report_model);
      runner.emit_artifacts(v, *report_model);
      result.rows.insert(result.rows.end(), rows.begin(), rows.end());
      outcome.completed = true;
    } catch (const std::exception& e) {
      outcome.error = e.what();
      log.stage("variant=" + to_string(v) + " failed: " + outcome.error);
    }
    result.outcomes.push_back(std::move(outcome));
  }
  write_results_csv(result.rows, (fs::path(spec.out_dir) / "results.csv").string());
  return result;
}

}  // namespace kiae

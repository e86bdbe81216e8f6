#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "kiae/csv.hpp"
#include "kiae/error.hpp"
#include "kiae/experiment.hpp"

namespace kiae {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::ae: return "ae";
    case Variant::kiae: return "kiae";
    case Variant::noisy_kiae: return "noisy_kiae";
  }
  return "?";
}

Variant parse_variant(const std::string& text) {
  if (text == "ae") return Variant::ae;
  if (text == "kiae") return Variant::kiae;
  if (text == "noisy_kiae") return Variant::noisy_kiae;
  throw ConfigError("unknown variant '" + text + "' (expected ae, kiae or noisy_kiae)");
}

std::string to_string(SplitTag s) {
  switch (s) {
    case SplitTag::fit: return "fit";
    case SplitTag::train: return "train";
    case SplitTag::test: return "test";
  }
  return "?";
}

SplitTag parse_split_tag(const std::string& text) {
  if (text == "fit") return SplitTag::fit;
  if (text == "train") return SplitTag::train;
  if (text == "test") return SplitTag::test;
  throw ConfigError("unknown split '" + text + "' (expected fit, train or test)");
}

void ExperimentSpec::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("experiment: " + msg); };
  if (!dataset.csv_path && !dataset.profile) fail("no dataset source (csv or synthetic)");
  if (dataset.csv_path && dataset.profile) fail("csv and synthetic sources are exclusive");
  if (variants.empty()) fail("no variants requested");
  if (splits.empty()) fail("no splits requested");
  for (std::size_t i = 0; i < variants.size(); ++i)
    for (std::size_t j = i + 1; j < variants.size(); ++j)
      if (variants[i] == variants[j]) fail("variant '" + to_string(variants[i]) + "' listed twice");
  if (!(alpha1 < alpha2)) fail("alpha1 must be below alpha2");
  if (!(known_fraction > 0.0 && known_fraction <= 1.0)) fail("known_fraction must lie in (0, 1]");
  if (dr_neighbors == 0) fail("dr_neighbors must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail("train_fraction must lie in (0, 1)");
  if (folds < 2) fail("folds must be >= 2");
  if (out_dir.empty()) fail("output directory is empty");
}

GammaTable ExperimentSpec::gamma_table(std::size_t k) const {
  GammaTable g = GammaTable::uniform(k, gamma);
  g.alpha1 = alpha1;
  g.alpha2 = alpha2;
  for (const auto& o : gamma_overrides) {
    if (o.x >= k || o.y >= k) {
      throw ConfigError("gamma_" + std::to_string(o.x) + "_" + std::to_string(o.y) +
                        " refers to a class beyond the " + std::to_string(k) + " in the data");
    }
    g.set(o.x, o.y, o.value);
  }
  g.validate();
  return g;
}

namespace {

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Parser {
 public:
  Parser(std::string origin, std::string base_dir, bool complete)
      : origin_(std::move(origin)), base_dir_(std::move(base_dir)), complete_(complete) {}

  ExperimentSpec run(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_;
      std::string s = raw;
      if (auto hash = s.find('#'); hash != std::string::npos) s.erase(hash);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') fail("malformed section header '" + s + "'");
        section_ = trim(std::string_view(s).substr(1, s.size() - 2));
        if (section_ != "dataset" && section_ != "knowledge" && section_ != "model" &&
            section_ != "experiment") {
          fail("unknown section [" + section_ + "]");
        }
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos) fail("expected 'key = value', got '" + s + "'");
      std::string key = trim(std::string_view(s).substr(0, eq));
      std::string value = trim(std::string_view(s).substr(eq + 1));
      if (key.empty()) fail("missing key before '='");
      if (section_.empty()) fail("key '" + key + "' appears before any [section]");
      std::string full = section_ + "." + key;
      if (seen_.count(full)) fail("duplicate key '" + key + "' in [" + section_ + "]");
      seen_[full] = line_;
      assign(key, value);
    }
    finish();
    return spec_;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { fail_at(line_, msg); }
  [[noreturn]] void fail_at(std::size_t line, const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + msg);
  }

  std::size_t as_count(const std::string& key, const std::string& v) const {
    std::size_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
      fail(key + " expects a non-negative integer, got '" + v + "'");
    return out;
  }

  std::uint64_t as_u64(const std::string& key, const std::string& v) const {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
      fail(key + " expects an unsigned 64-bit integer, got '" + v + "'");
    return out;
  }

  double as_real(const std::string& key, const std::string& v) const {
    double out = 0.0;
    const char* begin = v.data();
    if (!v.empty() && v.front() == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
      fail(key + " expects a real number, got '" + v + "'");
    return out;
  }

  template <typename F>
  auto checked(F&& f) const {
    try {
      return f();
    } catch (const ConfigError& e) {
      fail(e.what());
    } catch (const Error& e) {
      fail(e.what());
    }
  }

  std::string resolve(const std::string& path) const {
    std::filesystem::path p(path);
    if (p.is_relative() && !base_dir_.empty()) p = std::filesystem::path(base_dir_) / p;
    return p.lexically_normal().string();
  }

  void assign(const std::string& key, const std::string& v) {
    if (section_ == "dataset") return assign_dataset(key, v);
    if (section_ == "knowledge") return assign_knowledge(key, v);
    if (section_ == "model") return assign_model(key, v);
    return assign_experiment(key, v);
  }

  void assign_dataset(const std::string& key, const std::string& v) {
    auto& ds = spec_.dataset;
    if (key == "synthetic") {
      ds.profile = checked([&] { return parse_profile(v); });
    } else if (key == "csv") {
      if (v.empty()) fail("csv expects a path");
      ds.csv_path = resolve(v);
    } else if (key == "name") {
      spec_.name = v;
    } else if (key == "n") {
      ds.n = as_count(key, v);
    } else if (key == "d") {
      ds.d = as_count(key, v);
    } else if (key == "classes") {
      ds.k = as_count(key, v);
    } else if (key == "separation") {
      double s = as_real(key, v);
      if (s < 0.0) fail("separation must be >= 0");
      ds.separation = s;
    } else if (key == "label_column") {
      ds.csv.label_column = v;
    } else if (key == "id_column") {
      ds.csv.id_column = v;
    } else if (key == "categorical") {
      ds.csv.categorical_columns = split_list(v);
    } else {
      fail("unknown key '" + key + "' in [dataset]");
    }
  }

  void assign_knowledge(const std::string& key, const std::string& v) {
    if (key == "alpha1") {
      spec_.alpha1 = as_real(key, v);
    } else if (key == "alpha2") {
      spec_.alpha2 = as_real(key, v);
    } else if (key == "gamma") {
      spec_.gamma = as_real(key, v);
    } else if (key.rfind("gamma_", 0) == 0) {
      auto rest = key.substr(6);
      auto us = rest.find('_');
      if (us == std::string::npos) fail("expected gamma_<x>_<y>, got '" + key + "'");
      std::size_t x = as_count(key, rest.substr(0, us));
      std::size_t y = as_count(key, rest.substr(us + 1));
      if (x == y) fail(key + ": classes must differ");
      spec_.gamma_overrides.push_back({x, y, as_real(key, v)});
    } else if (key == "known_fraction") {
      double f = as_real(key, v);
      if (!(f > 0.0 && f <= 1.0)) fail("known_fraction = " + v + " lies outside (0, 1]");
      spec_.known_fraction = f;
    } else if (key == "dr_neighbors") {
      spec_.dr_neighbors = as_count(key, v);
      if (spec_.dr_neighbors == 0) fail("dr_neighbors must be >= 1");
    } else {
      fail("unknown key '" + key + "' in [knowledge]");
    }
  }

  void assign_model(const std::string& key, const std::string& v) {
    auto& m = spec_.model;
    if (key == "lstm_hidden") {
      m.lstm_hidden = as_count(key, v);
    } else if (key == "fc_a") {
      m.fc_a = as_count(key, v);
    } else if (key == "fc_b") {
      m.fc_b = as_count(key, v);
    } else if (key == "repr_dim") {
      m.repr_dim = as_count(key, v);
    } else if (key == "omega1" || key == "omega2") {
      double w = as_real(key, v);
      if (w < 0.0 || w > 1.0) fail(key + " = " + v + " lies outside [0, 1]");
      (key == "omega1" ? m.omega1 : m.omega2) = w;
    } else if (key == "batch_size") {
      m.batch_size = as_count(key, v);
    } else if (key == "epochs") {
      m.epochs = as_count(key, v);
    } else if (key == "learning_rate") {
      m.learning_rate = as_real(key, v);
    } else if (key == "sequence_mode") {
      m.sequence_mode = checked([&] { return parse_sequence_mode(v); });
    } else if (key == "repr_activation") {
      m.repr_activation = checked([&] { return parse_repr_activation(v); });
    } else if (key == "window") {
      m.window = as_count(key, v);
    } else if (key == "jump") {
      m.jump = as_count(key, v);
    } else {
      fail("unknown key '" + key + "' in [model]");
    }
  }

  void assign_experiment(const std::string& key, const std::string& v) {
    if (key == "variants") {
      spec_.variants.clear();
      for (const auto& item : split_list(v))
        spec_.variants.push_back(checked([&] { return parse_variant(item); }));
      if (spec_.variants.empty()) fail("variants is empty");
    } else if (key == "splits") {
      spec_.splits.clear();
      for (const auto& item : split_list(v))
        spec_.splits.push_back(checked([&] { return parse_split_tag(item); }));
      if (spec_.splits.empty()) fail("splits is empty");
    } else if (key == "seed") {
      spec_.seed = as_u64(key, v);
    } else if (key == "out") {
      spec_.out_dir = resolve(v);
    } else if (key == "train_fraction") {
      spec_.train_fraction = as_real(key, v);
    } else if (key == "folds") {
      spec_.folds = as_count(key, v);
    } else if (key == "plot_points") {
      spec_.plot_points = as_count(key, v);
    } else {
      fail("unknown key '" + key + "' in [experiment]");
    }
  }

  std::size_t line_of(const std::string& full) const {
    auto it = seen_.find(full);
    return it == seen_.end() ? line_ : it->second;
  }

  void finish() {
    auto& m = spec_.model;
    bool has1 = seen_.count("model.omega1") > 0;
    bool has2 = seen_.count("model.omega2") > 0;
    if (has1 && !has2) m.omega2 = 1.0 - m.omega1;
    if (has2 && !has1) m.omega1 = 1.0 - m.omega2;
    if (has1 && has2 && std::abs(m.omega1 + m.omega2 - 1.0) > 1e-12)
      fail_at(line_of("model.omega2"), "omega1 + omega2 must equal 1");
    if (!complete_) return;

    if (!spec_.dataset.csv_path && !spec_.dataset.profile)
      fail_at(line_, "missing required key [dataset] synthetic or csv");
    if (spec_.dataset.csv_path && spec_.dataset.profile)
      fail_at(line_of("dataset.csv"), "[dataset] csv and synthetic are exclusive");
    if (!seen_.count("experiment.variants"))
      fail_at(line_, "missing required key [experiment] variants");
    if (spec_.name.empty()) {
      spec_.name = spec_.dataset.profile
                       ? profile_name(*spec_.dataset.profile)
                       : std::filesystem::path(*spec_.dataset.csv_path).stem().string();
    }
    try {
      spec_.validate();
    } catch (const ConfigError& e) {
      fail_at(line_, e.what());
    }
  }

  std::string origin_;
  std::string base_dir_;
  bool complete_;
  std::size_t line_ = 0;
  std::string section_;
  std::map<std::string, std::size_t> seen_;
  ExperimentSpec spec_;
};

}  // namespace

ExperimentSpec parse_config_text(const std::string& text, const std::string& origin,
                                 const std::string& base_dir) {
  return Parser(origin, base_dir, true).run(text);
}

KiaeConfig parse_model_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  auto base = std::filesystem::path(path).parent_path().string();
  return Parser(path, base, false).run(buf.str()).model;
}

ExperimentSpec parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  auto base = std::filesystem::path(path).parent_path().string();
  return parse_config_text(buf.str(), path, base);
}

std::string config_reference() {
  return R"(Config file: `key = value` lines grouped in sections, `#` starts a comment.

[dataset]            (one of synthetic / csv is required)
  synthetic = economics_like | physics_like | biology_like
  csv = <path>                  relative to the config file
  name = <text>                 dataset column in results.csv (default: source name)
  n, d, classes = <count>       synthetic overrides (default: profile values)
  separation = <real>           distance between class means (default: profile value)
  label_column = <column>       csv label column (default: "label" if present)
  id_column = <column>          csv sample id column (default: "id" if present, else row index)
  categorical = <col>, <col>    columns aggregated by majority vote

[knowledge]
  alpha1 = 0, alpha2 = 1        same-category distance range
  gamma = 1                     cross-category base offset for every class pair
  gamma_<x>_<y> = <real>        per-pair override, 0-based class indices
  known_fraction = 1            share of pairs kept before k-NN completion
  dr_neighbors = 5              k of the completion regressor

[model]
  lstm_hidden = 32, fc_a = 64, fc_b = 32, repr_dim = 2
  omega1 = 0.5, omega2 = 0.5    either one alone implies the other
  batch_size = 16, epochs = 10, learning_rate = 0.001
  sequence_mode = single_step | per_feature
  window = <count>, jump = <count>   (default: whole sample, jump = window)
  repr_activation = relu | identity

[experiment]
  variants = ae, kiae, noisy_kiae    (required)
  splits = fit, train, test
  seed = <u64>                  (default: fresh entropy)
  out = kiae-out
  train_fraction = 0.8, folds = 5, plot_points = 90
)";
}

Dataset load_source(const DatasetSource& source, std::uint64_t seed) {
  if (source.csv_path) {
    // Columns literally named "label" and "id" are used unless others are named.
    CsvOptions opts = source.csv;
    std::ifstream in(*source.csv_path);
    std::string header;
    if (in && std::getline(in, header)) {
      if (!header.empty() && header.back() == '\r') header.pop_back();
      for (const auto& col : csv::split_line(header)) {
        if (col == "label" && !opts.label_column) opts.label_column = col;
        if (col == "id" && !opts.id_column) opts.id_column = col;
      }
    }
    return load_csv(*source.csv_path, opts);
  }
  if (!source.profile) throw ConfigError("dataset source has neither csv nor synthetic profile");
  auto def = profile_defaults(*source.profile);
  Rng rng(derive_seed(seed, 11));
  return generate_synthetic(*source.profile, source.n.value_or(def.n), source.d.value_or(def.d),
                            source.k.value_or(def.k), source.separation.value_or(def.separation),
                            rng);
}

}  // namespace kiae

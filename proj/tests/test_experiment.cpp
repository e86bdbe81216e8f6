#include "support.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "kiae/error.hpp"
#include "kiae/experiment.hpp"

using namespace kiae;
using kiae::test::TempDir;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

std::string config_error(const std::string& text) {
  try {
    parse_config_text(text, "t.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ExperimentSpec small_spec(const std::string& out) {
  auto spec = parse_config_text(R"(
[dataset]
synthetic = physics_like
n = 48
d = 6
separation = 4

[model]
lstm_hidden = 4
fc_a = 6
fc_b = 4
repr_dim = 2
epochs = 2
repr_activation = identity

[experiment]
variants = ae, kiae, noisy_kiae
splits = fit, train, test
folds = 2
seed = 7
plot_points = 20
)");
  spec.out_dir = out;
  return spec;
}

}  // namespace

TEST_CASE("minimal config takes every default") {
  auto spec = parse_config_text("[dataset]\nsynthetic = biology_like\n[experiment]\nvariants = kiae\n");
  CHECK(spec.name == "biology_like");
  CHECK(spec.variants == std::vector<Variant>{Variant::kiae});
  CHECK(spec.splits.size() == 3);
  CHECK(spec.model.omega1 == 0.5);
  CHECK(spec.model.batch_size == 16);
  CHECK(spec.alpha2 == 1.0);
  CHECK_FALSE(spec.seed.has_value());
  CHECK(config_reference().find("omega1") != std::string::npos);
}

TEST_CASE("one omega implies the other") {
  auto spec = parse_config_text(
      "[dataset]\nsynthetic = physics_like\n[model]\nomega1 = 0.7\n[experiment]\nvariants = ae\n");
  CHECK(spec.model.omega2 == doctest::Approx(0.3));
  auto other = parse_config_text(
      "[dataset]\nsynthetic = physics_like\n[model]\nomega2 = 0.25\n[experiment]\nvariants = ae\n");
  CHECK(other.model.omega1 == 0.75);
}

TEST_CASE("config errors name the line and the problem") {
  auto omega = config_error("[dataset]\nsynthetic = physics_like\n[model]\nomega1 = 1.2\n[experiment]\nvariants = ae\n");
  CHECK(omega.find("t.ini:4") != std::string::npos);
  CHECK(omega.find("[0, 1]") != std::string::npos);

  auto unknown = config_error("[dataset]\nsynthetic = physics_like\nbogus = 3\n");
  CHECK(unknown.find("t.ini:3") != std::string::npos);
  CHECK(unknown.find("bogus") != std::string::npos);

  auto type = config_error("[model]\nepochs = ten\n");
  CHECK(type.find("t.ini:2") != std::string::npos);
  CHECK(type.find("epochs") != std::string::npos);

  CHECK(config_error("[experiment]\nvariants = ae\n").find("synthetic or csv") != std::string::npos);
  CHECK(config_error("[dataset]\nsynthetic = physics_like\n").find("variants") != std::string::npos);
  CHECK(config_error("[nope]\n").find("t.ini:1") != std::string::npos);
  CHECK(config_error("[experiment]\nvariants = cat\n").find("cat") != std::string::npos);

  CHECK_THROWS_AS(parse_config("/nonexistent/kiae.ini"), IoError);
}

TEST_CASE("csv paths resolve against the config directory") {
  TempDir dir("cfg");
  std::ofstream(dir.file("run.ini")) << "[dataset]\ncsv = data.csv\nlabel_column = y\n"
                                        "[experiment]\nvariants = ae\n";
  auto spec = parse_config(dir.file("run.ini"));
  REQUIRE(spec.dataset.csv_path.has_value());
  CHECK(*spec.dataset.csv_path == dir.file("data.csv"));
  CHECK(spec.name == "data");

  Rng rng(1);
  write_csv(generate_synthetic(SyntheticProfile::physics_like, 12, 3, 2, 4.0, rng), dir.file("ids.csv"), true);
  DatasetSource src;
  src.csv_path = dir.file("ids.csv");
  auto ds = load_source(src, 0);
  CHECK(ds.dim() == 3);
  CHECK(ds.has_labels());
  CHECK(ds.sample_ids.front() == "s0");
}

TEST_CASE("scatter plot contents") {
  TempDir dir("svg");
  Matrix pts(4, 2);
  pts(1, 0) = 1.0, pts(2, 1) = 1.0, pts(3, 0) = 1.0, pts(3, 1) = 1.0;
  Matrix centroids(2, 2);
  centroids(1, 0) = 1.0;
  Matrix dist(2, 2);
  dist(0, 1) = dist(1, 0) = 1.0;
  std::vector<int> pred{0, 0, 1, 1}, labels{0, 1, 0, 1};
  emit_scatter(pts, pred, labels, centroids, dist, dir.file("s.svg"));
  auto svg = slurp(dir.file("s.svg"));
  CHECK(count(svg, "class=\"point\"") == 4);
  CHECK(count(svg, "class=\"centroid\"") == 2);
  CHECK(count(svg, "class=\"link\"") == 1);
  CHECK(count(svg, "class=\"distance\"") == 1);

  CHECK_THROWS_AS(emit_scatter(Matrix(0, 2), {}, {}, Matrix(0, 2), Matrix(0, 0), dir.file("e.svg")),
                  DomainError);
  CHECK_FALSE(std::filesystem::exists(dir.file("e.svg")));
  CHECK_THROWS_AS(emit_scatter(pts, pred, labels, centroids, dist, dir.file("missing/s.svg")), IoError);
}

TEST_CASE("experiment runs are reproducible and complete") {
  TempDir a("runa"), b("runb");
  auto first = run_experiment(small_spec(a.path().string()));
  auto second = run_experiment(small_spec(b.path().string()));
  CHECK(first.all_completed());
  CHECK(first.rows.size() == 9);
  for (const auto& r : first.rows) {
    CHECK(r.dataset == "physics_like");
    CHECK(r.misclassification >= 0.0);
    CHECK(r.misclassification <= 0.5);
  }
  for (std::string f : {"results.csv", "embedding_ae.csv", "embedding_kiae.csv",
                        "embedding_noisy_kiae.csv", "centroids_kiae.csv", "scatter_kiae.svg"}) {
    CAPTURE(f);
    REQUIRE(std::filesystem::exists(a.file(f)));
    CHECK(slurp(a.file(f)) == slurp(b.file(f)));
  }
  CHECK(std::filesystem::exists(a.file("run.log")));
  CHECK(count(slurp(a.file("scatter_ae.svg")), "class=\"point\"") == 20);

  auto z = load_embedding_csv(a.file("embedding_kiae.csv"));
  CHECK(z.size() == 48);
  CHECK(z.dim() == 2);
  CHECK(z.has_labels());
  CHECK(z.sample_ids.front() == "s0");
}

TEST_CASE("a variant alone reproduces its grouped result") {
  TempDir a("alone");
  auto spec = small_spec(a.path().string());
  spec.variants = {Variant::kiae};
  spec.splits = {SplitTag::test};
  auto alone = run_experiment(spec);
  TempDir b("grouped");
  auto full = small_spec(b.path().string());
  full.splits = {SplitTag::test};
  auto grouped = run_experiment(full);
  REQUIRE(alone.rows.size() == 1);
  REQUIRE(grouped.rows.size() == 3);
  CHECK(grouped.rows[1].variant == "kiae");
  CHECK(alone.rows[0].misclassification == grouped.rows[1].misclassification);
}

TEST_CASE("variants start from the same parameters") {
  // With no epochs every variant keeps its initial parameters, so identical
  // initialisation shows up as identical embeddings.
  TempDir dir("init");
  auto spec = small_spec(dir.path().string());
  spec.model.epochs = 0;
  spec.splits = {SplitTag::fit};
  REQUIRE(run_experiment(spec).all_completed());
  auto ae = slurp(dir.file("embedding_ae.csv"));
  CHECK(ae == slurp(dir.file("embedding_kiae.csv")));
  CHECK(ae == slurp(dir.file("embedding_noisy_kiae.csv")));
}

TEST_CASE("failures") {
  TempDir dir("fail");
  auto spec = small_spec(dir.path().string());
  spec.dataset.profile.reset();
  spec.dataset.csv_path = dir.file("absent.csv");
  CHECK_THROWS_AS(run_experiment(spec), IoError);

  // Divergence is recorded per variant; results.csv is still written.
  auto zero = small_spec(dir.path().string());
  zero.model.learning_rate = 1e300;
  zero.splits = {SplitTag::fit};
  zero.variants = {Variant::kiae};
  auto diverged = run_experiment(zero);
  CHECK_FALSE(diverged.all_completed());
  CHECK(diverged.rows.empty());
  CHECK(slurp(dir.file("results.csv")) == "dataset,variant,split,misclassification\n");
}

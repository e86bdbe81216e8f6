// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "kiae/csv.hpp"
#include "kiae/eval.hpp"
#include "kiae/experiment.hpp"
#include "kiae/knowledge.hpp"
#include "kiae/model.hpp"
#include "oracles.hpp"

using namespace kiae;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = rng.normal();
  return m;
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  return true;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

KiaeConfig micro(std::uint64_t seed) {
  KiaeConfig c;
  c.input_dim = 3;
  c.lstm_hidden = 2;
  c.fc_a = 2;
  c.fc_b = 2;
  c.repr_dim = 2;
  c.omega1 = 0.5;
  c.omega2 = 0.5;
  c.seed = seed;
  return c;
}

KnowledgeMatrix random_knowledge(std::size_t n, Rng& rng) {
  KnowledgeMatrix mt(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.next_unit() < 0.8) mt.set(i, j, 3.0 * rng.next_unit());
  return mt;
}

void gradient_correctness() {
  auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t compared = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (auto act : {ReprActivation::relu, ReprActivation::identity}) {
      auto c = micro(seed);
      c.repr_activation = act;
      auto model = KiaeModel::initialize(c);
      auto batch = random_matrix(3, 3, 100 + seed);
      Rng rng(200 + seed);
      auto mt = random_knowledge(3, rng);
      auto analytic = loss(model, batch, mt, 0.5, 0.5).gradient;
      std::vector<double> x(model.parameters().begin(), model.parameters().end());
      auto numeric = finite_diff_grad(
          [&](std::span<const double> p) {
            KiaeModel probe = model;
            std::copy(p.begin(), p.end(), probe.parameters().begin());
            return loss(probe, batch, mt, 0.5, 0.5, false).value;
          },
          x, 1e-5);
      for (std::size_t k = 0; k < x.size(); ++k) {
        double diff = std::abs(analytic[k] - numeric[k]);
        double scale = std::max(std::abs(analytic[k]), std::abs(numeric[k]));
        // Near-zero components: the central difference carries ~1e-11 of
        // rounding noise, so they are held to an absolute bound instead.
        double err = scale < 1e-6 ? (diff <= 1e-10 ? 0.0 : 1.0) : diff / scale;
        worst = std::max(worst, err);
        ++compared;
      }
    }
  }
  double secs = seconds_since(t0);
  report(1, "gradient-correctness", worst < 1e-4 && secs < 30.0,
         "40 micro-models, " + std::to_string(compared) + " components, worst relative error " +
             fmt("%.3g", worst) + " (< 1e-4), " + fmt("%.2f", secs) + " s");
}

void baseline_equivalence() {
  int identical = 0;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    auto c = micro(trial);
    c.lstm_hidden = 4;
    c.fc_a = 5;
    c.fc_b = 3;
    auto model = KiaeModel::initialize(c);
    auto batch = random_matrix(6, 3, 300 + trial);
    Rng rng(400 + trial);
    auto mt = trial % 2 ? corrupt_noisy(6, rng) : random_knowledge(6, rng);
    auto plain = reconstruction_objective(model, batch);
    auto with = loss(model, batch, mt, 1.0, 0.0);
    bool ok = std::bit_cast<std::uint64_t>(plain.value) == std::bit_cast<std::uint64_t>(with.value) &&
              same_bits(plain.gradient, with.gradient);
    identical += ok;
  }
  report(2, "baseline-equivalence", identical == 10,
         std::to_string(identical) + "/10 trials bit-identical to the reconstruction objective");
}

struct ProfileRun {
  std::vector<double> ae, kiae, noisy;
  int ordered_centroids = 0;
};

ExperimentSpec profile_spec(SyntheticProfile profile, std::uint64_t seed, const fs::path& out) {
  ExperimentSpec spec;
  spec.dataset.profile = profile;
  spec.name = profile_name(profile);
  spec.variants = {Variant::ae, Variant::kiae, Variant::noisy_kiae};
  spec.splits = {SplitTag::test};
  spec.seed = seed;
  spec.out_dir = out.string();
  spec.model.repr_activation = ReprActivation::identity;
  if (profile == SyntheticProfile::physics_like) {
    spec.model.repr_dim = 4;
    spec.model.epochs = 10;
    spec.model.learning_rate = 1e-3;
  } else {
    spec.model.repr_dim = 8;
    spec.model.epochs = 30;
    spec.model.learning_rate = 3e-3;
    spec.gamma_overrides = {{0, 1, 1.0}, {0, 2, 2.0}, {1, 2, 3.0}};
  }
  return spec;
}

// d(c0,c1) < d(c0,c2) < d(c1,c2) for the clusters matched to labels 0, 1, 2.
bool centroid_order(const fs::path& centroids_csv) {
  auto lines = csv::read_lines(centroids_csv.string());
  if (lines.size() != 4) return false;
  auto header = csv::split_line(lines[0]);
  std::size_t first_dist = 0;
  while (first_dist < header.size() && header[first_dist] != "dist_0") ++first_dist;
  std::vector<std::size_t> cluster_of_label(3);
  std::vector<std::vector<double>> dist(3);
  for (std::size_t c = 0; c < 3; ++c) {
    auto cells = csv::split_line(lines[c + 1]);
    cluster_of_label[std::stoul(cells[1])] = c;
    for (std::size_t k = 0; k < 3; ++k) dist[c].push_back(*csv::parse_double(cells[first_dist + k]));
  }
  auto d = [&](std::size_t a, std::size_t b) { return dist[cluster_of_label[a]][cluster_of_label[b]]; };
  return d(0, 1) < d(0, 2) && d(0, 2) < d(1, 2);
}

ProfileRun run_profile(SyntheticProfile profile, const fs::path& root) {
  ProfileRun out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    fs::path dir = root / (profile_name(profile) + "-" + std::to_string(seed));
    auto result = run_experiment(profile_spec(profile, seed, dir));
    for (const auto& r : result.rows) {
      if (r.variant == "ae") out.ae.push_back(r.misclassification);
      if (r.variant == "kiae") out.kiae.push_back(r.misclassification);
      if (r.variant == "noisy_kiae") out.noisy.push_back(r.misclassification);
    }
    if (profile == SyntheticProfile::biology_like)
      out.ordered_centroids += centroid_order(dir / "centroids_kiae.csv");
  }
  return out;
}

void ordering_and_knowledge(const fs::path& root) {
  auto t0 = std::chrono::steady_clock::now();
  auto phys = run_profile(SyntheticProfile::physics_like, root);
  auto bio = run_profile(SyntheticProfile::biology_like, root);
  double secs = seconds_since(t0);

  bool complete = phys.ae.size() == 5 && phys.kiae.size() == 5 && phys.noisy.size() == 5 &&
                  bio.ae.size() == 5 && bio.kiae.size() == 5 && bio.noisy.size() == 5;
  std::string detail;
  bool ok = complete && secs < 600.0;
  if (complete) {
    double pa = median(phys.ae), pk = median(phys.kiae), pn = median(phys.noisy);
    double ba = median(bio.ae), bk = median(bio.kiae), bn = median(bio.noisy);
    struct Check {
      const char* what;
      bool ok;
    };
    std::vector<Check> checks{{"physics kiae<ae", pk < pa},     {"physics noisy>ae", pn > pa},
                              {"physics kiae<=0.10", pk <= 0.10}, {"physics noisy>=0.30", pn >= 0.30},
                              {"biology kiae<ae", bk < ba},     {"biology noisy>ae", bn > ba}};
    detail = "median test misclassification physics ae=" + fmt("%.3f", pa) + " kiae=" + fmt("%.3f", pk) +
             " noisy=" + fmt("%.3f", pn) + "; biology ae=" + fmt("%.3f", ba) + " kiae=" + fmt("%.3f", bk) +
             " noisy=" + fmt("%.3f", bn) + ";";
    for (const auto& c : checks) {
      ok = ok && c.ok;
      if (!c.ok) detail += std::string(" unmet: ") + c.what + ";";
    }
  } else {
    detail = "some variant runs did not complete;";
  }
  detail += " " + fmt("%.0f", secs) + " s (< 600)";
  report(3, "variant-ordering", ok, detail);
  report(4, "knowledge-ordering", bio.ordered_centroids >= 4,
         std::to_string(bio.ordered_centroids) + "/5 seeds with d(c1,c2) < d(c1,c3) < d(c2,c3)");
}

void ward_oracle() {
  Rng rng(55);
  int agree = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + rng.below(8);
    std::size_t k = 1 + rng.below(n);
    auto x = random_matrix(n, 1 + rng.below(3), 1000 + trial);
    auto got = ward_cluster(x, k).merges;
    auto want = oracle::ward(x, k);
    bool same = got.size() == want.size();
    for (std::size_t s = 0; same && s < want.size(); ++s)
      same = got[s].left == want[s].left && got[s].right == want[s].right &&
             std::abs(got[s].cost - want[s].cost) <= 1e-9 * std::max(1.0, want[s].cost);
    agree += same;
  }
  report(5, "ward-oracle", agree == 200, std::to_string(agree) + "/200 merge sequences identical");
}

void misclassification_oracle() {
  Rng rng(66);
  int agree = 0;
  bool identity_zero = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t k = 2 + trial % 3;
    std::size_t n = k + rng.below(50);
    std::vector<int> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(i < k ? i : rng.below(k));
      pred[i] = static_cast<int>(rng.below(k));
    }
    auto e = misclassification_enumerate(pred, truth, k);
    auto h = misclassification_assignment(pred, truth, k);
    agree += e.rate == h.rate && e.errors == h.errors;
    identity_zero = identity_zero && misclassification(truth, truth, k).rate == 0.0;
  }
  report(6, "misclassification-oracle", agree == 100 && identity_zero,
         std::to_string(agree) + "/100 enumeration == assignment; identity predictions " +
             (identity_zero ? "score 0" : "do not score 0"));
}

void pca_identities() {
  double worst_var = 0.0, worst_dist = 0.0;
  Rng rng(77);
  for (std::uint64_t t = 0; t < 50; ++t) {
    std::size_t n = 5 + rng.below(40), r = 2 + rng.below(5);
    auto x = random_matrix(n, r, 2000 + t);
    std::size_t c = std::min(n, r);
    auto p = pca_project(x, c);
    for (std::size_t j = 0; j < c; ++j) {
      double mean = 0.0, ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += p.projected(i, j);
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) ss += (p.projected(i, j) - mean) * (p.projected(i, j) - mean);
      worst_var = std::max(worst_var, std::abs(ss / static_cast<double>(n - 1) - p.eigenvalues[j]));
    }
    if (c == r)
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
          worst_dist = std::max(worst_dist, std::abs(std::sqrt(oracle::sq_dist(p.projected.row(a), p.projected.row(b))) -
                                                     std::sqrt(oracle::sq_dist(x.row(a), x.row(b)))));
  }
  report(7, "pca-identities", worst_var <= 1e-8 && worst_dist <= 1e-8,
         "50 datasets, worst variance gap " + fmt("%.3g", worst_var) + ", worst distance gap " +
             fmt("%.3g", worst_dist));
}

void dr_quality() {
  Rng rng(88);
  Dataset ds;
  ds.samples = random_matrix(60, 10, 3000);
  for (std::size_t i = 0; i < 60; ++i) ds.sample_ids.push_back("s" + std::to_string(i));
  for (std::size_t c = 0; c < 10; ++c) ds.feature_names.push_back("f" + std::to_string(c));
  ds.feature_kinds.assign(10, FeatureKind::continuous);
  KnowledgeMatrix truth(60), masked(60);
  std::vector<std::pair<std::size_t, std::size_t>> hidden;
  double known_sum = 0.0;
  std::size_t known_count = 0;
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t j = i + 1; j < 60; ++j) {
      double d = std::sqrt(oracle::sq_dist(ds.samples.row(i), ds.samples.row(j)));
      truth.set(i, j, d);
      if (rng.next_unit() < 0.5) {
        hidden.push_back({i, j});
      } else {
        masked.set(i, j, d);
        known_sum += d;
        ++known_count;
      }
    }
  auto filled = fill_missing_dr(masked, ds, default_pair_metrics());
  double mean = known_sum / static_cast<double>(known_count);
  double se_dr = 0.0, se_mean = 0.0;
  for (auto [i, j] : hidden) {
    se_dr += std::pow(filled.at(i, j) - truth.at(i, j), 2);
    se_mean += std::pow(mean - truth.at(i, j), 2);
  }
  double rmse_dr = std::sqrt(se_dr / hidden.size()), rmse_mean = std::sqrt(se_mean / hidden.size());
  bool unchanged = true;
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t j = 0; j < 60; ++j)
      if (masked.known(i, j))
        unchanged = unchanged && std::bit_cast<std::uint64_t>(filled.at(i, j)) ==
                                     std::bit_cast<std::uint64_t>(masked.at(i, j));
  double gain = 1.0 - rmse_dr / rmse_mean;
  report(8, "dr-completion", gain >= 0.30 && unchanged,
         "RMSE dr=" + fmt("%.4f", rmse_dr) + " mean-imputation=" + fmt("%.4f", rmse_mean) + " (" +
             fmt("%.0f", 100 * gain) + "% lower); known entries " + (unchanged ? "bit-unchanged" : "changed"));
}

void determinism(const fs::path& root) {
  auto spec_a = profile_spec(SyntheticProfile::biology_like, 9, root / "replay-a");
  auto spec_b = profile_spec(SyntheticProfile::biology_like, 9, root / "replay-b");
  spec_a.splits = spec_b.splits = {SplitTag::fit, SplitTag::test};
  spec_a.model.epochs = spec_b.model.epochs = 5;
  bool ok = run_experiment(spec_a).all_completed() && run_experiment(spec_b).all_completed();
  int files = 0;
  for (const auto& entry : fs::directory_iterator(spec_a.out_dir)) {
    std::string name = entry.path().filename().string();
    if (name != "results.csv" && name.rfind("embedding_", 0) != 0) continue;
    ok = ok && slurp(entry.path()) == slurp(fs::path(spec_b.out_dir) / name);
    ++files;
  }
  ok = ok && files == 4;
  report(9, "determinism-replay", ok, std::to_string(files) + " files compared byte for byte");
}

void windows() {
  Rng rng(99);
  int covered = 0, aggregated = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t len = 1 + rng.below(40), window = 1 + rng.below(12), jump = 1 + rng.below(window);
    auto plan = plan_windows(len, window, jump);
    covered += oracle::covers(plan);
    std::vector<FeatureKind> kinds(len);
    for (auto& k : kinds) k = rng.below(2) ? FeatureKind::categorical : FeatureKind::continuous;
    std::vector<std::vector<double>> values(plan.windows.size(), std::vector<double>(window));
    for (auto& w : values)
      for (auto& v : w) v = static_cast<double>(rng.below(3)) + 0.4 * (rng.next_unit() - 0.5);
    auto got = aggregate_windows(plan, values, kinds);
    auto want = oracle::aggregate(plan, values, kinds);
    bool same = got.size() == want.size();
    for (std::size_t p = 0; same && p < len; ++p)
      same = kinds[p] == FeatureKind::categorical ? got[p] == want[p]
                                                  : std::abs(got[p] - want[p]) <= 1e-12;
    aggregated += same;
  }
  report(10, "window-coverage-aggregation", covered == 100 && aggregated == 100,
         std::to_string(covered) + "/100 plans fully covered, " + std::to_string(aggregated) +
             "/100 aggregations match the per-position oracle");
}

}  // namespace

int main() {
  if (!std::getenv("KIAE_LOG")) setenv("KIAE_LOG", "quiet", 0);
  fs::path root = fs::temp_directory_path() / ("kiae-acceptance-" + std::to_string(Rng(entropy_seed()).next_u64()));
  fs::create_directories(root);
  gradient_correctness();
  baseline_equivalence();
  ordering_and_knowledge(root);
  ward_oracle();
  misclassification_oracle();
  pca_identities();
  dr_quality();
  determinism(root);
  windows();
  std::error_code ec;
  fs::remove_all(root, ec);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

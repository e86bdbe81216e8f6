#include "support.hpp"

#include <fstream>
#include <set>

#include "kiae/error.hpp"
#include "kiae/data.hpp"

using namespace kiae;
using kiae::test::TempDir;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("load_csv minimal file") {
  TempDir dir("data");
  write_text(dir.file("a.csv"), "f1,f2,label\n1,2,x\n3,4,y\n5,6,x\n");
  auto ds = load_csv(dir.file("a.csv"), {.label_column = "label"});
  CHECK(ds.size() == 3);
  CHECK(ds.dim() == 2);
  CHECK(ds.num_classes == 2);
  CHECK(ds.labels == std::vector<int>{0, 1, 0});
  CHECK(ds.label_names == std::vector<std::string>{"x", "y"});
  CHECK(ds.sample_ids == std::vector<std::string>{"0", "1", "2"});
  CHECK(ds.samples(1, 1) == 4.0);
}

TEST_CASE("load_csv errors") {
  TempDir dir("data");
  write_text(dir.file("bad.csv"), "f1,f2,label\nabc,2,x\n3,4,y\n");
  try {
    load_csv(dir.file("bad.csv"), {.label_column = "label"});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("\"f1\"") != std::string::npos);
  }
  write_text(dir.file("ragged.csv"), "f1,f2\n1,2\n3\n");
  CHECK_THROWS_AS(load_csv(dir.file("ragged.csv")), FormatError);
  write_text(dir.file("empty.csv"), "f1,f2\n1,\n");
  CHECK_THROWS_AS(load_csv(dir.file("empty.csv")), ParseError);
  CHECK_THROWS_AS(load_csv(dir.file("missing.csv")), IoError);
  write_text(dir.file("nolabel.csv"), "f1,f2\n1,2\n");
  CHECK_THROWS_AS(load_csv(dir.file("nolabel.csv"), {.label_column = "label"}), FormatError);
}

TEST_CASE("csv round trip is bit exact") {
  TempDir dir("data");
  Rng rng(17);
  auto ds = generate_synthetic(SyntheticProfile::economics_like, 100, 9, 4, 4.0, rng);
  // Awkward values: subnormal, huge, negative zero.
  ds.samples(0, 0) = 4.9e-324;
  ds.samples(1, 1) = -1.7976931348623157e308;
  ds.samples(2, 2) = -0.0;
  ds.samples(3, 3) = 0.1 + 0.2;
  write_csv(ds, dir.file("rt.csv"), true);
  auto back = load_csv(dir.file("rt.csv"), {.label_column = "label", .id_column = "id"});
  CHECK(kiae::test::bits_equal(back.samples.values(), ds.samples.values()));
  CHECK(back.sample_ids == ds.sample_ids);
  CHECK(back.labels == ds.labels);
}

TEST_CASE("synthetic profiles") {
  auto phys = profile_defaults(SyntheticProfile::physics_like);
  CHECK(phys.n == 2500);
  CHECK(phys.d == 33);
  CHECK(phys.k == 2);
  auto eco = profile_defaults(SyntheticProfile::economics_like);
  CHECK(eco.n == 2000);
  CHECK(eco.d == 9);
  CHECK(eco.k == 4);
  auto bio = profile_defaults(SyntheticProfile::biology_like);
  CHECK(bio.n == 90);
  CHECK(bio.d == 512);
  CHECK(bio.k == 3);
  CHECK(parse_profile("physics_like") == SyntheticProfile::physics_like);
  CHECK_THROWS_AS(parse_profile("chemistry_like"), DomainError);
  Rng rng(1);
  CHECK_THROWS_AS(generate_synthetic(SyntheticProfile::physics_like, 2, 3, 3, 1.0, rng), DomainError);
}

TEST_CASE("well separated clusters are linearly recoverable") {
  Rng rng(5);
  auto ds = generate_synthetic(SyntheticProfile::physics_like, 200, 20, 2, 10.0, rng);
  // Nearest class centroid (estimated from the data) classifies everything.
  std::vector<std::vector<double>> mean(2, std::vector<double>(20, 0.0));
  std::vector<int> count(2, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ++count[ds.labels[i]];
    for (std::size_t c = 0; c < 20; ++c) mean[ds.labels[i]][c] += ds.samples(i, c);
  }
  for (int k = 0; k < 2; ++k)
    for (auto& v : mean[k]) v /= count[k];
  int errors = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double d[2] = {0, 0};
    for (int k = 0; k < 2; ++k)
      for (std::size_t c = 0; c < 20; ++c) d[k] += std::pow(ds.samples(i, c) - mean[k][c], 2);
    errors += (d[0] < d[1] ? 0 : 1) != ds.labels[i];
  }
  CHECK(errors == 0);
}

TEST_CASE("class means sit at the requested separation") {
  Rng rng(9);
  auto ds = generate_synthetic(SyntheticProfile::economics_like, 8000, 9, 4, 6.0, rng);
  std::vector<std::vector<double>> mean(4, std::vector<double>(9, 0.0));
  std::vector<int> count(4, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ++count[ds.labels[i]];
    for (std::size_t c = 0; c < 9; ++c) mean[ds.labels[i]][c] += ds.samples(i, c);
  }
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(count[k] - 2000) <= 1);
    for (auto& v : mean[k]) v /= count[k];
  }
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      double s = 0.0;
      for (std::size_t c = 0; c < 9; ++c) s += std::pow(mean[a][c] - mean[b][c], 2);
      CHECK(std::sqrt(s) == doctest::Approx(6.0).epsilon(0.05));
    }
}

TEST_CASE("label counts are balanced") {
  Rng rng(2);
  auto ds = generate_synthetic(SyntheticProfile::biology_like, 91, 5, 3, 1.0, rng);
  std::vector<int> count(3, 0);
  for (int l : ds.labels) ++count[l];
  CHECK(*std::max_element(count.begin(), count.end()) -
            *std::min_element(count.begin(), count.end()) <=
        1);
}

TEST_CASE("plan_windows examples") {
  auto one = plan_windows(10, 10, 1);
  CHECK(one.windows == std::vector<Window>{{0, 10}});
  auto three = plan_windows(10, 4, 3);
  CHECK(three.windows == std::vector<Window>{{0, 4}, {3, 7}, {6, 10}});
  auto tail = plan_windows(11, 4, 3);
  CHECK(tail.windows == std::vector<Window>{{0, 4}, {3, 7}, {6, 10}, {7, 11}});
  auto pad = plan_windows(3, 5, 2);
  CHECK(pad.left_pad == 2);
  CHECK(pad.windows == std::vector<Window>{{0, 5}});
  CHECK_THROWS_AS(plan_windows(10, 0, 1), DomainError);
  CHECK_THROWS_AS(plan_windows(10, 4, 0), DomainError);
}

TEST_CASE("plan_windows covers every position") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t len = 1 + rng.below(60);
    std::size_t window = 1 + rng.below(20);
    std::size_t jump = 1 + rng.below(window);
    auto plan = plan_windows(len, window, jump);
    std::vector<int> hits(plan.padded_length(), 0);
    for (std::size_t w = 0; w < plan.windows.size(); ++w) {
      const auto& win = plan.windows[w];
      CHECK(win.end - win.start == window);
      CHECK(win.end <= plan.padded_length());
      if (w > 0 && w + 1 < plan.windows.size())
        CHECK(win.start - plan.windows[w - 1].start == jump);
      for (std::size_t p = win.start; p < win.end; ++p) ++hits[p];
    }
    for (int h : hits) CHECK(h >= 1);
  }
}

TEST_CASE("split sizes, partitions and determinism") {
  Rng rng(3);
  auto ds = generate_synthetic(SyntheticProfile::physics_like, 100, 4, 2, 2.0, rng);
  SplitSpec spec{SplitMode::train_test, 0.8, 5, 99};
  auto s = split(ds, spec);
  CHECK(s.train.size() == 80);
  CHECK(s.test.size() == 20);
  std::set<std::size_t> train(s.train.begin(), s.train.end()), test(s.test.begin(), s.test.end());
  for (auto t : test) CHECK(train.count(t) == 0);
  CHECK(train.size() + test.size() == 100);

  REQUIRE(s.folds.size() == 5);
  std::set<std::size_t> seen;
  for (const auto& f : s.folds) {
    CHECK(f.validation.size() == 16);
    CHECK(f.train.size() == 64);
    for (auto v : f.validation) {
      CHECK(seen.insert(v).second);
      CHECK(train.count(v) == 1);
    }
  }
  CHECK(seen == train);

  // Stratification: per-class share of the test set within one sample.
  int test_zero = 0;
  for (auto t : s.test) test_zero += ds.labels[t] == 0;
  CHECK(std::abs(test_zero - 10) <= 1);

  auto again = split(ds, spec);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  for (std::size_t f = 0; f < 5; ++f) CHECK(again.folds[f].validation == s.folds[f].validation);

  auto fit = split(ds, SplitSpec{SplitMode::fit_all, 0.8, 5, 1});
  CHECK(fit.train.size() == 100);
  CHECK(fit.test.empty());
}

TEST_CASE("stratification needs k samples per class") {
  Rng rng(4);
  auto ds = generate_synthetic(SyntheticProfile::physics_like, 12, 2, 2, 1.0, rng);
  CHECK_THROWS_AS(split(ds, SplitSpec{SplitMode::train_test, 0.5, 5, 1}), DomainError);
}

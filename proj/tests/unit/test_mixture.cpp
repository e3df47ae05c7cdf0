#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <doctest.h>

#include "parkzone/error.hpp"
#include "parkzone/mixture.hpp"
#include "parkzone/oracle.hpp"
#include "parkzone/random.hpp"

using namespace parkzone;

namespace {

const NormParams kUnit{{0, 0, 0}, {1, 1, 1}};

std::vector<FeatureRow> random_rows(Rng& rng, std::size_t n) {
  std::vector<FeatureRow> rows(n);
  for (auto& r : rows) r = {uniform01(rng), uniform01(rng), uniform01(rng)};
  return rows;
}

ZoneModel random_model(Rng& rng, int k) {
  ZoneModel m;
  m.k = k;
  m.norm = kUnit;
  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    m.weights.push_back(0.2 + uniform01(rng));
    total += m.weights.back();
    m.means.push_back({uniform01(rng), uniform01(rng), uniform01(rng)});
    m.variances.push_back({0.01 + 0.1 * uniform01(rng), 0.01 + 0.1 * uniform01(rng), 0.01 + 0.1 * uniform01(rng)});
  }
  for (auto& w : m.weights) w /= total;
  return m;
}

/// Three tight blobs in normalized space, 10+ stds apart.
std::pair<std::vector<FeatureRow>, std::vector<int>> separated_blobs(Rng& rng, std::size_t per) {
  const std::array<FeatureRow, 3> centres = {{{0.1, 0.1, 0.2}, {0.9, 0.2, 0.5}, {0.5, 0.9, 0.8}}};
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<FeatureRow> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < 3 * per; ++i) {
    const int c = static_cast<int>(i % 3);
    rows.push_back({centres[c][0] + noise(rng), centres[c][1] + noise(rng), centres[c][2] + noise(rng)});
    labels.push_back(c);
  }
  return {rows, labels};
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (ab.emplace(a[i], b[i]).first->second != b[i] || ba.emplace(b[i], a[i]).first->second != a[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("normalization maps columns to [0, 1] and round-trips") {
  std::vector<FeatureRow> raw = {{47.61, -122.34, 0.2}, {47.62, -122.33, 0.8}, {47.615, -122.335, 0.5}};
  auto f = FeatureMatrix::fit(raw);
  CHECK(f.row(0) == FeatureRow{0.0, 0.0, 0.0});
  CHECK(f.row(1) == FeatureRow{1.0, 1.0, 1.0});
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto there = f.norm().denormalize(f.row(i));
    auto back = f.norm().normalize(there);
    for (std::size_t d = 0; d < kFeatureDims; ++d) CHECK(std::abs(back[d] - f.row(i)[d]) <= 1e-12);
  }
}

TEST_CASE("constant columns normalize to zero") {
  std::vector<FeatureRow> raw = {{1, 2, 0.5}, {1, 3, 0.5}};
  auto f = FeatureMatrix::fit(raw);
  CHECK(f.row(0)[0] == 0.0);
  CHECK(f.row(1)[2] == 0.0);
}

TEST_CASE("log likelihood at the mean of a unit Gaussian") {
  ZoneModel m;
  m.k = 1;
  m.weights = {1.0};
  m.means = {{0.3, 0.4, 0.5}};
  m.variances = {{1.0, 1.0, 1.0}};
  m.norm = kUnit;
  auto one = FeatureMatrix::from_normalized({{0.3, 0.4, 0.5}}, kUnit);
  CHECK(std::abs(log_likelihood(one, m) - (-2.756815599614018)) <= 1e-12);
  auto two = FeatureMatrix::from_normalized({{0.3, 0.4, 0.5}, {0.3, 0.4, 0.5}}, kUnit);
  CHECK(log_likelihood(two, m) == 2.0 * log_likelihood(one, m));
}

TEST_CASE("log likelihood matches the non-log oracle") {
  Rng rng(derive_seed(21, {}));
  for (int rep = 0; rep < 50; ++rep) {
    auto rows = random_rows(rng, 30);
    auto m = random_model(rng, 1 + rep % 5);
    auto f = FeatureMatrix::from_normalized(rows, kUnit);
    const double expected = oracle::log_likelihood(rows, m.weights, m.means, m.variances);
    CHECK(std::abs(log_likelihood(f, m) - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("log-domain E-step survives far-away samples") {
  ZoneModel m;
  m.k = 2;
  m.weights = {0.5, 0.5};
  m.means = {{0, 0, 0}, {1, 1, 1}};
  m.variances = {{1e-6, 1e-6, 1e-6}, {1e-6, 1e-6, 1e-6}};
  m.norm = kUnit;
  auto f = FeatureMatrix::from_normalized({{0.9, 0.9, 0.9}}, kUnit);
  auto r = e_step(f, m);
  CHECK(std::isfinite(r(0, 0)));
  CHECK(r(0, 1) == doctest::Approx(1.0));
  CHECK(std::isfinite(log_likelihood(f, m)));
}

TEST_CASE("responsibilities") {
  SUBCASE("mirror-symmetric components split evenly") {
    ZoneModel m;
    m.k = 2;
    m.weights = {0.5, 0.5};
    m.means = {{0.2, 0.5, 0.5}, {0.8, 0.5, 0.5}};
    m.variances = {{0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}};
    m.norm = kUnit;
    auto r = e_step(FeatureMatrix::from_normalized({{0.5, 0.5, 0.5}}, kUnit), m);
    CHECK(r(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("k = 1 gives all ones") {
    Rng rng(derive_seed(22, {}));
    auto m = random_model(rng, 1);
    auto r = e_step(FeatureMatrix::from_normalized(random_rows(rng, 10), kUnit), m);
    for (std::size_t i = 0; i < 10; ++i) CHECK(r(i, 0) == 1.0);
  }
  SUBCASE("random instances match the direct formula") {
    Rng rng(derive_seed(23, {}));
    for (int rep = 0; rep < 30; ++rep) {
      auto rows = random_rows(rng, 25);
      auto m = random_model(rng, 2 + rep % 4);
      auto r = e_step(FeatureMatrix::from_normalized(rows, kUnit), m);
      auto o = oracle::responsibilities(rows, m.weights, m.means, m.variances);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        double sum = 0.0;
        for (int j = 0; j < m.k; ++j) {
          CHECK(std::abs(r(i, j) - o[i][j]) <= 1e-9);
          sum += r(i, j);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("M-step moments") {
  Rng rng(derive_seed(24, {}));
  auto rows = random_rows(rng, 40);
  auto f = FeatureMatrix::from_normalized(rows, kUnit);

  SUBCASE("one-hot responsibilities give per-cluster sample moments") {
    Responsibilities r(40, 2);
    std::vector<std::array<double, 3>> a, b;
    for (std::size_t i = 0; i < 40; ++i) {
      r(i, i < 15 ? 0 : 1) = 1.0;
      (i < 15 ? a : b).push_back(rows[i]);
    }
    auto m = m_step(f, r);
    auto oa = oracle::weighted_moments(a, std::vector<double>(a.size(), 1.0));
    CHECK(m.weights[0] == doctest::Approx(15.0 / 40.0));
    for (std::size_t d = 0; d < 3; ++d) {
      CHECK(m.means[0][d] == doctest::Approx(oa.mean[d]).epsilon(1e-12));
      CHECK(m.variances[0][d] == doctest::Approx(std::max(oa.variance[d], kVarianceFloor)).epsilon(1e-12));
    }
  }
  SUBCASE("uniform responsibilities give the global moments twice") {
    Responsibilities r(40, 2);
    for (std::size_t i = 0; i < 40; ++i) r(i, 0) = r(i, 1) = 0.5;
    auto m = m_step(f, r);
    for (std::size_t d = 0; d < 3; ++d) {
      CHECK(m.means[0][d] == m.means[1][d]);
      CHECK(m.variances[0][d] == m.variances[1][d]);
    }
    CHECK(m.weights[0] == 0.5);
  }
  SUBCASE("random responsibilities match the weighted-moment oracle") {
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t k = 2 + rep % 3;
      Responsibilities r(40, k);
      for (std::size_t i = 0; i < 40; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += (r(i, j) = uniform01(rng) + 1e-3);
        for (std::size_t j = 0; j < k; ++j) r(i, j) /= s;
      }
      auto m = m_step(f, r);
      for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> col;
        for (std::size_t i = 0; i < 40; ++i) col.push_back(r(i, j));
        auto o = oracle::weighted_moments(rows, col);
        CHECK(std::abs(m.weights[j] - o.mass / 40.0) <= 1e-10);
        for (std::size_t d = 0; d < 3; ++d) {
          CHECK(std::abs(m.means[j][d] - o.mean[d]) <= 1e-10);
          CHECK(std::abs(m.variances[j][d] - std::max(o.variance[d], kVarianceFloor)) <= 1e-10);
        }
      }
    }
  }
  SUBCASE("variance floor on duplicated coordinates") {
    auto dup = FeatureMatrix::from_normalized(std::vector<FeatureRow>(5, {0.5, 0.5, 0.5}), kUnit);
    Responsibilities r(5, 1);
    for (std::size_t i = 0; i < 5; ++i) r(i, 0) = 1.0;
    auto m = m_step(dup, r);
    CHECK(m.variances[0] == FeatureRow{kVarianceFloor, kVarianceFloor, kVarianceFloor});
  }
}

TEST_CASE("k = 1 fit is the closed form") {
  Rng rng(derive_seed(25, {}));
  auto rows = random_rows(rng, 60);
  auto model = em_fit(FeatureMatrix::from_normalized(rows, kUnit), 1, EmConfig{});
  CHECK(model.weights == std::vector<double>{1.0});
  auto o = oracle::weighted_moments(rows, std::vector<double>(rows.size(), 1.0));
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(std::abs(model.means[0][d] - o.mean[d]) <= 1e-12);
    CHECK(std::abs(model.variances[0][d] - o.variance[d]) <= 1e-12);
  }
}

TEST_CASE("separated clusters are recovered exactly") {
  Rng rng(derive_seed(26, {}));
  auto [rows, labels] = separated_blobs(rng, 40);
  EmConfig cfg;
  cfg.seed = 5;
  auto model = em_fit(FeatureMatrix::from_normalized(rows, kUnit), 3, cfg);
  CHECK(same_partition(model.assignments, labels));
}

TEST_CASE("EM trace is monotone and the model satisfies its constraints") {
  Rng rng(derive_seed(27, {}));
  for (int rep = 0; rep < 10; ++rep) {
    auto rows = random_rows(rng, 120);
    auto f = FeatureMatrix::from_normalized(rows, kUnit);
    EmConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(rep);
    cfg.restarts = 3;
    FitTrace trace;
    auto model = em_fit(f, 2 + rep % 4, cfg, &trace);
    REQUIRE(trace.restarts.size() == 3);
    REQUIRE(trace.best_restart >= 0);
    for (const auto& r : trace.restarts) {
      for (std::size_t t = 1; t < r.log_likelihood.size(); ++t) {
        if (std::find(r.reinitialized_at.begin(), r.reinitialized_at.end(), t) != r.reinitialized_at.end()) continue;
        CHECK(r.log_likelihood[t] >= r.log_likelihood[t - 1] - 1e-9);
      }
    }
    CHECK_NOTHROW(model.validate());
    CHECK(std::abs(std::accumulate(model.weights.begin(), model.weights.end(), 0.0) - 1.0) <= 1e-12);
    for (const auto& v : model.variances) {
      for (double x : v) CHECK(x >= kVarianceFloor);
    }
    CHECK(model.log_likelihood == doctest::Approx(log_likelihood(f, model)).epsilon(1e-12));
  }
}

TEST_CASE("same seed, same data gives a bit-identical model") {
  Rng rng(derive_seed(28, {}));
  auto f = FeatureMatrix::from_normalized(random_rows(rng, 80), kUnit);
  EmConfig cfg;
  cfg.seed = 99;
  auto a = em_fit(f, 3, cfg);
  auto b = em_fit(f, 3, cfg);
  CHECK(a.means == b.means);
  CHECK(a.variances == b.variances);
  CHECK(a.weights == b.weights);
  CHECK(a.assignments == b.assignments);
  CHECK(a.log_likelihood == b.log_likelihood);
}

TEST_CASE("hard assignment") {
  Responsibilities r(2, 3);
  r(0, 0) = 0.2, r(0, 1) = 0.5, r(0, 2) = 0.3;
  r(1, 0) = 0.4, r(1, 1) = 0.4, r(1, 2) = 0.2;
  CHECK(hard_assignments(r) == std::vector<int>{1, 0});
}

TEST_CASE("assign reproduces training labels and matches the oracle argmax") {
  Rng rng(derive_seed(29, {}));
  auto [rows, labels] = separated_blobs(rng, 20);
  auto f = FeatureMatrix::from_normalized(rows, kUnit);
  auto model = em_fit(f, 3, EmConfig{});
  CHECK(assign(f, model) == model.assignments);

  std::vector<FeatureRow> fresh;
  std::normal_distribution<double> spread(0.0, 0.08);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto& c = rows[i % rows.size()];
    fresh.push_back({c[0] + spread(rng), c[1] + spread(rng), c[2] + spread(rng)});
  }
  auto labels_new = assign(FeatureMatrix::from_normalized(fresh, kUnit), model);
  auto o = oracle::responsibilities(fresh, model.weights, model.means, model.variances);
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    auto best = std::max_element(o[i].begin(), o[i].end()) - o[i].begin();
    CHECK(labels_new[i] == best);
  }

  ZoneModel dominant;
  dominant.k = 2;
  dominant.weights = {0.1, 0.9};
  dominant.means = {{0.5, 0.5, 0.5}, {0.2, 0.2, 0.2}};
  dominant.variances = {{0.05, 0.05, 0.05}, {0.05, 0.05, 0.05}};
  dominant.norm = kUnit;
  CHECK(assign(FeatureMatrix::from_normalized({{0.2, 0.2, 0.2}}, kUnit), dominant) == std::vector<int>{1});
}

TEST_CASE("assign refuses features normalized differently") {
  Rng rng(derive_seed(30, {}));
  auto f = FeatureMatrix::from_normalized(random_rows(rng, 20), kUnit);
  auto model = em_fit(f, 2, EmConfig{});
  auto other = FeatureMatrix::from_normalized(random_rows(rng, 20), NormParams{{0, 0, 0}, {2, 2, 2}});
  CHECK_THROWS_AS(assign(other, model), Error);
}

TEST_CASE("relabeling components leaves LL and BIC unchanged") {
  Rng rng(derive_seed(31, {}));
  auto f = FeatureMatrix::from_normalized(random_rows(rng, 40), kUnit);
  auto m = random_model(rng, 3);
  ZoneModel p = m;
  const std::array<int, 3> perm = {2, 0, 1};
  for (int j = 0; j < 3; ++j) {
    p.weights[j] = m.weights[perm[j]];
    p.means[j] = m.means[perm[j]];
    p.variances[j] = m.variances[perm[j]];
  }
  CHECK(log_likelihood(f, p) == doctest::Approx(log_likelihood(f, m)).epsilon(1e-14));
  auto la = hard_assignments(e_step(f, m));
  auto lb = hard_assignments(e_step(f, p));
  for (std::size_t i = 0; i < la.size(); ++i) CHECK(perm[lb[i]] == la[i]);
}

TEST_CASE("degrees of freedom and BIC") {
  CHECK(degrees_of_freedom(1) == 7);
  CHECK(degrees_of_freedom(2) == 14);
  CHECK(degrees_of_freedom(8) == 2 * degrees_of_freedom(4));
  ZoneModel m;
  m.k = 2;
  m.weights = {0.5, 0.5};
  m.means = {{0, 0, 0}, {1, 1, 1}};
  m.variances = {{1, 1, 1}, {1, 1, 1}};
  m.log_likelihood = -100.0;
  CHECK(std::abs(bic(m, 50) - 254.76832207599404) <= 1e-9);
}

TEST_CASE("fit rejects impossible k") {
  auto f = FeatureMatrix::from_normalized({{0, 0, 0}, {1, 1, 1}}, kUnit);
  CHECK_THROWS_AS(em_fit(f, 3, EmConfig{}), Error);
  CHECK_THROWS_AS(em_fit(f, 0, EmConfig{}), Error);
}

TEST_CASE("model validation") {
  Rng rng(derive_seed(32, {}));
  auto m = random_model(rng, 2);
  m.assignments.clear();
  CHECK_NOTHROW(m.validate());
  auto bad = m;
  bad.weights[0] += 0.1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = m;
  bad.variances[1][2] = 1e-9;
  CHECK_THROWS_AS(bad.validate(), Error);
}

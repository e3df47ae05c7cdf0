#include "parkzone/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "parkzone/error.hpp"
#include "parkzone/random.hpp"

namespace parkzone {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

double squared_distance(const FeatureRow& a, const FeatureRow& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < kFeatureDims; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

FeatureRow column_variances(const FeatureMatrix& x) {
  FeatureRow mean{}, var{};
  const double n = static_cast<double>(x.rows());
  for (const auto& r : x.data())
    for (std::size_t d = 0; d < kFeatureDims; ++d) mean[d] += r[d];
  for (auto& m : mean) m /= n;
  for (const auto& r : x.data())
    for (std::size_t d = 0; d < kFeatureDims; ++d) var[d] += (r[d] - mean[d]) * (r[d] - mean[d]);
  for (auto& v : var) v = std::max(v / n, kVarianceFloor);
  return var;
}

/// Fills `resp` (if given) with posteriors and returns the log likelihood.
double expectation(const FeatureMatrix& x, const ZoneModel& model, Responsibilities* resp) {
  const auto k = static_cast<std::size_t>(model.k);
  // Per-component log(pi_j) - 0.5 (log|Sigma_j| + d log 2pi) and inverse variances.
  std::vector<double> offset(k);
  std::vector<FeatureRow> inv_var(k);
  for (std::size_t j = 0; j < k; ++j) {
    double log_det = 0.0;
    for (std::size_t d = 0; d < kFeatureDims; ++d) {
      log_det += std::log(model.variances[j][d]);
      inv_var[j][d] = 1.0 / model.variances[j][d];
    }
    offset[j] = model.weights[j] > 0.0
                    ? std::log(model.weights[j]) - 0.5 * (log_det + static_cast<double>(kFeatureDims) * kLogTwoPi)
                    : kNegInf;
  }

  std::vector<double> logp(k);
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto& xi = x.row(i);
    double peak = kNegInf;
    for (std::size_t j = 0; j < k; ++j) {
      double quad = 0.0;
      for (std::size_t d = 0; d < kFeatureDims; ++d) {
        const double diff = xi[d] - model.means[j][d];
        quad += diff * diff * inv_var[j][d];
      }
      logp[j] = offset[j] - 0.5 * quad;
      peak = std::max(peak, logp[j]);
    }
    if (peak == kNegInf) fail(ErrorKind::invalid_model, "sample has zero density under every component");
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += (logp[j] = std::exp(logp[j] - peak));
    total += peak + std::log(sum);
    if (resp) {
      const double inv = 1.0 / sum;
      for (std::size_t j = 0; j < k; ++j) (*resp)(i, j) = logp[j] * inv;
    }
  }
  return total;
}

void check_model_against(const FeatureMatrix& x, const ZoneModel& model) {
  model.validate();
  if (x.rows() == 0) fail(ErrorKind::invalid_input, "empty feature matrix");
}

std::vector<FeatureRow> kmeanspp_means(const FeatureMatrix& x, int k, Rng& rng) {
  std::vector<FeatureRow> means;
  means.reserve(static_cast<std::size_t>(k));
  means.push_back(x.row(uniform_index(rng, x.rows())));
  std::vector<double> nearest(x.rows(), std::numeric_limits<double>::infinity());
  while (means.size() < static_cast<std::size_t>(k)) {
    for (std::size_t i = 0; i < x.rows(); ++i) nearest[i] = std::min(nearest[i], squared_distance(x.row(i), means.back()));
    means.push_back(x.row(weighted_index(rng, nearest)));
  }
  return means;
}

}  // namespace

FeatureRow NormParams::normalize(const FeatureRow& raw) const {
  FeatureRow out{};
  for (std::size_t d = 0; d < kFeatureDims; ++d) {
    const double span = max[d] - min[d];
    out[d] = span > 0.0 ? (raw[d] - min[d]) / span : 0.0;
  }
  return out;
}

FeatureRow NormParams::denormalize(const FeatureRow& normalized) const {
  FeatureRow out{};
  for (std::size_t d = 0; d < kFeatureDims; ++d) out[d] = min[d] + normalized[d] * (max[d] - min[d]);
  return out;
}

FeatureMatrix FeatureMatrix::fit(std::span<const FeatureRow> raw) {
  if (raw.empty()) fail(ErrorKind::invalid_input, "cannot normalize an empty feature set");
  NormParams p;
  p.min = raw.front();
  p.max = raw.front();
  for (const auto& r : raw) {
    for (std::size_t d = 0; d < kFeatureDims; ++d) {
      if (!std::isfinite(r[d])) fail(ErrorKind::invalid_input, "non-finite feature value");
      p.min[d] = std::min(p.min[d], r[d]);
      p.max[d] = std::max(p.max[d], r[d]);
    }
  }
  return with_params(raw, p);
}

FeatureMatrix FeatureMatrix::with_params(std::span<const FeatureRow> raw, const NormParams& params) {
  FeatureMatrix m;
  m.norm_ = params;
  m.data_.reserve(raw.size());
  for (const auto& r : raw) {
    for (double v : r) {
      if (!std::isfinite(v)) fail(ErrorKind::invalid_input, "non-finite feature value");
    }
    m.data_.push_back(params.normalize(r));
  }
  return m;
}

FeatureMatrix FeatureMatrix::from_normalized(std::vector<FeatureRow> rows, const NormParams& params) {
  FeatureMatrix m;
  m.data_ = std::move(rows);
  m.norm_ = params;
  return m;
}

void ZoneModel::validate() const {
  const auto kk = static_cast<std::size_t>(k);
  if (k < 1 || weights.size() != kk || means.size() != kk || variances.size() != kk) {
    fail(ErrorKind::invalid_model, fmt::format("component arrays do not match k = {}", k));
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) fail(ErrorKind::invalid_model, "mixture weight outside [0, 1]");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorKind::invalid_model, fmt::format("mixture weights sum to {}", sum));
  for (const auto& v : variances) {
    for (double x : v) {
      if (!(x >= kVarianceFloor)) fail(ErrorKind::invalid_model, fmt::format("variance {} below floor", x));
    }
  }
  for (int a : assignments) {
    if (a < 0 || a >= k) fail(ErrorKind::invalid_model, "assignment index out of range");
  }
}

double log_gaussian(const FeatureRow& x, const FeatureRow& mean, const FeatureRow& variance) {
  double quad = 0.0;
  double log_det = 0.0;
  for (std::size_t d = 0; d < kFeatureDims; ++d) {
    const double diff = x[d] - mean[d];
    quad += diff * diff / variance[d];
    log_det += std::log(variance[d]);
  }
  return -0.5 * (quad + log_det + static_cast<double>(kFeatureDims) * kLogTwoPi);
}

double log_likelihood(const FeatureMatrix& features, const ZoneModel& model) {
  check_model_against(features, model);
  return expectation(features, model, nullptr);
}

Responsibilities e_step(const FeatureMatrix& features, const ZoneModel& model) {
  check_model_against(features, model);
  Responsibilities r(features.rows(), static_cast<std::size_t>(model.k));
  expectation(features, model, &r);
  return r;
}

MStepResult m_step(const FeatureMatrix& features, const Responsibilities& resp) {
  const std::size_t n = features.rows();
  const std::size_t k = resp.cols();
  if (resp.rows() != n || n == 0 || k == 0) fail(ErrorKind::invalid_input, "responsibilities do not match features");

  MStepResult out;
  out.weights.assign(k, 0.0);
  out.means.assign(k, FeatureRow{});
  out.variances.assign(k, FeatureRow{});
  std::vector<double> mass(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = features.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      const double r = resp(i, j);
      mass[j] += r;
      for (std::size_t d = 0; d < kFeatureDims; ++d) out.means[j][d] += r * x[d];
    }
  }
  const double mass_floor = kCollapseMassFraction * static_cast<double>(n);
  std::vector<bool> collapsed(k, false);
  for (std::size_t j = 0; j < k; ++j) {
    out.weights[j] = mass[j] / static_cast<double>(n);
    if (mass[j] < mass_floor) {
      collapsed[j] = true;
      out.collapsed.push_back(static_cast<int>(j));
      continue;
    }
    for (auto& m : out.means[j]) m /= mass[j];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = features.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      if (collapsed[j]) continue;
      const double r = resp(i, j);
      for (std::size_t d = 0; d < kFeatureDims; ++d) {
        const double diff = x[d] - out.means[j][d];
        out.variances[j][d] += r * diff * diff;
      }
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (collapsed[j]) {
      // Placeholder moments; the caller reseeds collapsed components.
      out.means[j] = FeatureRow{};
      out.variances[j] = column_variances(features);
      continue;
    }
    for (auto& v : out.variances[j]) v = std::max(v / mass[j], kVarianceFloor);
  }
  // Renormalize against accumulated rounding so the simplex constraint is tight.
  double total = 0.0;
  for (double w : out.weights) total += w;
  for (auto& w : out.weights) w /= total;
  return out;
}

ZoneModel em_fit(const FeatureMatrix& features, int k, const EmConfig& config, FitTrace* trace) {
  const std::size_t n = features.rows();
  if (k < 1) fail(ErrorKind::invalid_input, fmt::format("component count must be >= 1, got {}", k));
  if (n < static_cast<std::size_t>(k)) {
    fail(ErrorKind::invalid_input, fmt::format("{} samples cannot support {} components", n, k));
  }
  if (config.restarts < 1 || config.max_iter < 1 || !(config.epsilon >= 0.0)) {
    fail(ErrorKind::invalid_config, "EM needs restarts >= 1, max_iter >= 1, epsilon >= 0");
  }
  const FeatureRow base_variance = column_variances(features);
  const auto kk = static_cast<std::size_t>(k);

  if (trace) *trace = FitTrace{};
  ZoneModel best;
  bool have_best = false;

  for (int restart = 0; restart < config.restarts; ++restart) {
    Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(restart)}));
    RestartTrace rt;

    ZoneModel model;
    model.k = k;
    model.norm = features.norm();
    model.seed = config.seed;
    model.weights.assign(kk, 1.0 / static_cast<double>(k));
    model.means = kmeanspp_means(features, k, rng);
    model.variances.assign(kk, base_variance);

    Responsibilities resp(n, kk);
    bool reseeded = false;
    bool just_reseeded = false;
    double previous = 0.0;
    for (int it = 0;; ++it) {
      const double ll = expectation(features, model, &resp);
      rt.log_likelihood.push_back(ll);
      model.log_likelihood = ll;
      if (it > 0 && !just_reseeded && ll - previous <= config.epsilon) {
        rt.converged = true;
        break;
      }
      if (it == config.max_iter) break;
      previous = ll;
      just_reseeded = false;

      auto step = m_step(features, resp);
      if (!step.collapsed.empty()) {
        if (reseeded) {
          rt.discarded = true;
          break;
        }
        reseeded = true;
        just_reseeded = true;
        for (int j : step.collapsed) {
          step.means[static_cast<std::size_t>(j)] = features.row(uniform_index(rng, n));
          step.variances[static_cast<std::size_t>(j)] = base_variance;
          step.weights[static_cast<std::size_t>(j)] = 1.0 / static_cast<double>(k);
        }
        double total = 0.0;
        for (double w : step.weights) total += w;
        for (auto& w : step.weights) w /= total;
        rt.reinitialized_at.push_back(rt.log_likelihood.size());
      }
      model.weights = std::move(step.weights);
      model.means = std::move(step.means);
      model.variances = std::move(step.variances);
    }

    if (!rt.discarded && (!have_best || model.log_likelihood > best.log_likelihood)) {
      best = model;
      have_best = true;
      if (trace) trace->best_restart = restart;
    }
    if (trace) trace->restarts.push_back(std::move(rt));
  }

  if (!have_best) {
    fail(ErrorKind::fit_failure, fmt::format("all {} restarts collapsed for k = {}", config.restarts, k));
  }
  Responsibilities resp(n, kk);
  best.log_likelihood = expectation(features, best, &resp);
  best.assignments = hard_assignments(resp);
  return best;
}

std::vector<int> hard_assignments(const Responsibilities& resp) {
  std::vector<int> out(resp.rows(), 0);
  for (std::size_t i = 0; i < resp.rows(); ++i) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < resp.cols(); ++j) {
      if (resp(i, j) > resp(i, arg)) arg = j;
    }
    out[i] = static_cast<int>(arg);
  }
  return out;
}

std::vector<int> assign(const FeatureMatrix& features, const ZoneModel& model) {
  check_model_against(features, model);
  if (!(features.norm() == model.norm)) {
    fail(ErrorKind::invalid_input, "features were not normalized with the model's parameters");
  }
  Responsibilities r(features.rows(), static_cast<std::size_t>(model.k));
  expectation(features, model, &r);
  return hard_assignments(r);
}

int degrees_of_freedom(int k) { return k * (2 * static_cast<int>(kFeatureDims) + 1); }

double bic(const ZoneModel& model, std::size_t n) {
  if (n < 1) fail(ErrorKind::invalid_input, "BIC needs at least one sample");
  model.validate();
  return -2.0 * model.log_likelihood + std::log(static_cast<double>(n)) * degrees_of_freedom(model.k);
}

}  // namespace parkzone

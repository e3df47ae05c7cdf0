#include "parkzone/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "parkzone/error.hpp"

namespace parkzone::oracle {

double morans_i(const std::vector<double>& o, const std::vector<std::vector<double>>& w) {
  const std::size_t n = o.size();
  bool constant = true;
  for (std::size_t i = 1; i < n; ++i) constant = constant && o[i] == o[0];
  if (constant) throw Error(ErrorKind::degenerate_variance, "oracle: constant occupancy");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += o[i];
  const double obar = total / n;
  double s0 = 0.0, num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      s0 += w[i][j];
      num += w[i][j] * (o[i] - obar) * (o[j] - obar);
    }
    den += (o[i] - obar) * (o[i] - obar);
  }
  if (s0 == 0.0) throw Error(ErrorKind::degenerate_weights, "oracle: zero total weight");
  return (n / s0) * (num / den);
}

double mean(const std::vector<double>& values) {
  long double s = 0.0L;
  for (double v : values) s += v;
  return static_cast<double>(s / values.size());
}

WeightedMoments weighted_moments(const std::vector<std::array<double, 3>>& rows, const std::vector<double>& r) {
  WeightedMoments m;
  for (std::size_t i = 0; i < rows.size(); ++i) m.mass += r[i];
  for (int d = 0; d < 3; ++d) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) s += r[i] * rows[i][d];
    m.mean[d] = s / m.mass;
    double v = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) v += r[i] * (rows[i][d] - m.mean[d]) * (rows[i][d] - m.mean[d]);
    m.variance[d] = v / m.mass;
  }
  return m;
}

double mixture_density(const std::array<double, 3>& x, const std::vector<double>& weights,
                       const std::vector<std::array<double, 3>>& means,
                       const std::vector<std::array<double, 3>>& variances) {
  const double pi = 3.14159265358979323846;
  double p = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    double pdf = 1.0;
    for (int d = 0; d < 3; ++d) {
      const double diff = x[d] - means[j][d];
      pdf *= std::exp(-diff * diff / (2.0 * variances[j][d])) / std::sqrt(2.0 * pi * variances[j][d]);
    }
    p += weights[j] * pdf;
  }
  return p;
}

double log_likelihood(const std::vector<std::array<double, 3>>& rows, const std::vector<double>& weights,
                      const std::vector<std::array<double, 3>>& means,
                      const std::vector<std::array<double, 3>>& variances) {
  double ll = 0.0;
  for (const auto& x : rows) ll += std::log(mixture_density(x, weights, means, variances));
  return ll;
}

std::vector<std::vector<double>> responsibilities(const std::vector<std::array<double, 3>>& rows,
                                                  const std::vector<double>& weights,
                                                  const std::vector<std::array<double, 3>>& means,
                                                  const std::vector<std::array<double, 3>>& variances) {
  std::vector<std::vector<double>> out;
  for (const auto& x : rows) {
    const double total = mixture_density(x, weights, means, variances);
    std::vector<double> r;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      r.push_back(mixture_density(x, {1.0}, {means[j]}, {variances[j]}) * weights[j] / total);
    }
    out.push_back(std::move(r));
  }
  return out;
}

double hourly_occupancy(const std::vector<Transaction>& transactions, int supply, Date date, int hour,
                        const PaidSchedule& schedule) {
  const MinuteStamp day = static_cast<MinuteStamp>(date.time_since_epoch().count()) * 24 * 60;
  const MinuteStamp open = day + schedule.start_hour * 60;
  const MinuteStamp close = day + schedule.end_hour * 60;
  double sum = 0.0;
  for (int m = 0; m < 60; ++m) {
    const MinuteStamp minute = day + hour * 60 + m;
    int active = 0;
    for (const auto& tx : transactions) {
      const MinuteStamp tx_day = tx.start >= 0 ? tx.start / (24 * 60) * (24 * 60) : tx.start;
      if (tx_day != day) continue;
      if (minute < open || minute >= close) continue;
      if (tx.start <= minute && minute < tx.start + tx.duration_minutes) ++active;
    }
    sum += std::min(static_cast<double>(active) / supply, 1.5);
  }
  return sum / 60.0;
}

}  // namespace parkzone::oracle

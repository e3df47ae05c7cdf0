#pragma once

#include <array>
#include <vector>

#include "parkzone/civil_time.hpp"
#include "parkzone/ingest.hpp"

/// Direct-formula reference evaluations used by the test suites. Nothing in
/// here calls into the production numerics.
namespace parkzone::oracle {

/// Literal double sum; throws degenerate_variance / degenerate_weights like production.
double morans_i(const std::vector<double>& occupancy, const std::vector<std::vector<double>>& weights);

double mean(const std::vector<double>& values);

struct WeightedMoments {
  double mass = 0.0;
  std::array<double, 3> mean{};
  std::array<double, 3> variance{};  // unfloored
};

/// Moments of `rows` weighted by `r` (one column of responsibilities).
WeightedMoments weighted_moments(const std::vector<std::array<double, 3>>& rows, const std::vector<double>& r);

/// Mixture density evaluated without logs: prod over dims of the 1-D normal pdf.
double mixture_density(const std::array<double, 3>& x, const std::vector<double>& weights,
                       const std::vector<std::array<double, 3>>& means,
                       const std::vector<std::array<double, 3>>& variances);

double log_likelihood(const std::vector<std::array<double, 3>>& rows, const std::vector<double>& weights,
                      const std::vector<std::array<double, 3>>& means,
                      const std::vector<std::array<double, 3>>& variances);

std::vector<std::vector<double>> responsibilities(const std::vector<std::array<double, 3>>& rows,
                                                  const std::vector<double>& weights,
                                                  const std::vector<std::array<double, 3>>& means,
                                                  const std::vector<std::array<double, 3>>& variances);

/// Hourly occupancy by scanning every transaction for every minute of the hour.
/// Minutes outside the paid window of the transaction's start date never count.
double hourly_occupancy(const std::vector<Transaction>& transactions, int supply, Date date, int hour,
                        const PaidSchedule& schedule);

}  // namespace parkzone::oracle

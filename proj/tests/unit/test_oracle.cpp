#include <cmath>

#include <doctest.h>

#include "parkzone/error.hpp"
#include "parkzone/oracle.hpp"

using namespace parkzone;

TEST_CASE("oracle Moran's I on the two-point hand case") {
  // o = (0, 1): z = (-1/2, 1/2), sum w z z = 2 w (-1/4), sum z^2 = 1/2, S0 = 2w.
  std::vector<std::vector<double>> w = {{0.0, 3.0}, {3.0, 0.0}};
  CHECK(oracle::morans_i({0.0, 1.0}, w) == -1.0);
}

TEST_CASE("oracle Moran's I rejects constant values and empty weights") {
  std::vector<std::vector<double>> w = {{0.0, 1.0}, {1.0, 0.0}};
  CHECK_THROWS_AS(oracle::morans_i({0.5, 0.5}, w), Error);
  std::vector<std::vector<double>> zero = {{0.0, 0.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(oracle::morans_i({0.1, 0.5}, zero), Error);
}

TEST_CASE("oracle density of a unit Gaussian at its mean") {
  const double p = oracle::mixture_density({0.0, 0.0, 0.0}, {1.0}, {{0.0, 0.0, 0.0}}, {{1.0, 1.0, 1.0}});
  CHECK(std::log(p) == doctest::Approx(-2.756815599614018).epsilon(1e-14));
}

TEST_CASE("oracle weighted moments") {
  auto m = oracle::weighted_moments({{0.0, 0.0, 0.0}, {1.0, 2.0, 4.0}}, {1.0, 1.0});
  CHECK(m.mass == 2.0);
  CHECK(m.mean == std::array<double, 3>{0.5, 1.0, 2.0});
  CHECK(m.variance == std::array<double, 3>{0.25, 1.0, 4.0});
}

TEST_CASE("oracle hourly occupancy") {
  PaidSchedule s;
  const Date d = parse_date("2017-06-05");
  std::vector<Transaction> t = {{"A", parse_minute_stamp("2017-06-05T07:30"), 60, PaymentSource::paystation}};
  CHECK(oracle::hourly_occupancy(t, 2, d, 8, s) == doctest::Approx(30.0 * 0.5 / 60.0));
  CHECK(oracle::hourly_occupancy(t, 2, d, 9, s) == 0.0);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hydro/encodings.hpp"

using hydro::EncodingConfig;

TEST_CASE("linear_space ramp and degenerate case") {
  const auto three = hydro::linear_space(3);
  CHECK(three[0] == doctest::Approx(0.0));
  CHECK(three[1] == doctest::Approx(0.5));
  CHECK(three[2] == doctest::Approx(1.0));

  const auto one = hydro::linear_space(1);
  CHECK(one.size() == 1);
  CHECK(one[0] == doctest::Approx(0.0));

  const auto many = hydro::linear_space(100);
  for (std::size_t i = 1; i < many.size(); ++i) CHECK(many[i] > many[i - 1]);
}

TEST_CASE("linear_time endpoints and midpoint") {
  const auto two = hydro::linear_time(2);
  CHECK(two[0] == doctest::Approx(0.0));
  CHECK(two[1] == doctest::Approx(1.0));
  CHECK(hydro::linear_time(5)[2] == doctest::Approx(0.5));
  CHECK(hydro::linear_time(1)[0] == doctest::Approx(0.0));
}

TEST_CASE("fourier_time phase origin and quarter period") {
  const auto [s, c] = hydro::fourier_time(10, 8.0);
  CHECK(s[0] == doctest::Approx(0.0));
  CHECK(c[0] == doctest::Approx(1.0));
  CHECK(std::abs(s[2] - 1.0) < 1e-9);  // t = period/4
  CHECK(std::abs(c[2]) < 1e-9);
}

TEST_CASE("fourier_time pythagorean identity") {
  const auto [s, c] = hydro::fourier_time(2000, hydro::kAnnualPeriodDays);
  for (std::size_t t = 0; t < 2000; ++t)
    CHECK(std::abs(s[t] * s[t] + c[t] * c[t] - 1.0) < 1e-12);
}

TEST_CASE("annual fourier repeats after four years (integral day count)") {
  // 4 * 365.25 = 1461 days is the smallest whole-day multiple of the period.
  const auto [s, c] = hydro::fourier_time(3000, hydro::kAnnualPeriodDays);
  for (std::size_t t = 0; t + 1461 < 3000; t += 17) {
    CHECK(std::abs(s[t] - s[t + 1461]) < 1e-6);
    CHECK(std::abs(c[t] - c[t + 1461]) < 1e-6);
  }
}

TEST_CASE("legendre endpoint and parity values") {
  const auto p2 = hydro::legendre_time(101, 2);
  CHECK(p2.front() == doctest::Approx(1.0));  // u = -1
  CHECK(p2.back() == doctest::Approx(1.0));   // u = +1
  CHECK(p2[50] == doctest::Approx(-0.5));     // u = 0

  const auto p3 = hydro::legendre_time(101, 3);
  for (std::size_t t = 0; t < 101; ++t)
    CHECK(p3[t] == doctest::Approx(-p3[100 - t]).epsilon(1e-12));

  CHECK_THROWS_AS(hydro::legendre_time(10, 5), hydro::DomainError);
  CHECK_THROWS_AS(hydro::legendre_time(10, 1), hydro::DomainError);
}

TEST_CASE("build_encoding_set channel counts per tier") {
  const auto tier1 = hydro::build_encoding_set({1, true}, 100, 7);
  CHECK(tier1.per_day.cols() == 0);
  CHECK(tier1.per_catchment.cols() == 0);

  const auto tier2 = hydro::build_encoding_set({2, true}, 100, 7);
  CHECK(tier2.per_day.cols() == 1);
  CHECK(tier2.per_catchment.cols() == 1);

  const auto tier3 = hydro::build_encoding_set({3, true}, 100, 7);
  CHECK(tier3.per_day.cols() == 3);  // linear + annual sin/cos
  CHECK(tier3.per_catchment.cols() == 1);

  const auto tier4 = hydro::build_encoding_set({4, true}, 100, 7);
  CHECK(tier4.per_day.cols() == 16);  // 1 + 2 + 10 + 3
  CHECK(tier4.per_catchment.cols() == 1);
  CHECK(tier4.time_channel_names.size() == 16);

  CHECK_THROWS_AS(hydro::build_encoding_set({0, true}, 10, 2),
                  hydro::DomainError);
}

TEST_CASE("tiers are nested") {
  const auto tier3 = hydro::build_encoding_set({3, true}, 50, 4);
  const auto tier4 = hydro::build_encoding_set({4, true}, 50, 4);
  for (std::size_t c = 0; c < tier3.per_day.cols(); ++c) {
    CHECK(tier3.time_channel_names[c] == tier4.time_channel_names[c]);
    for (std::size_t t = 0; t < 50; ++t)
      CHECK(tier3.per_day(t, c) == tier4.per_day(t, c));
  }
}

TEST_CASE("all channels stay inside [-1, 1] up to a million days") {
  for (const std::size_t n_days : {2ul, 400ul, 100000ul, 1000000ul}) {
    const auto set = hydro::build_encoding_set({4, true}, n_days, 9);
    for (std::size_t c = 0; c < set.per_day.cols(); ++c) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t t = 0; t < set.per_day.rows(); ++t) {
        lo = std::min(lo, set.per_day(t, c));
        hi = std::max(hi, set.per_day(t, c));
      }
      CHECK(lo >= -1.0 - 1e-12);
      CHECK(hi <= 1.0 + 1e-12);
    }
    for (std::size_t c = 0; c < set.per_catchment.cols(); ++c) {
      for (std::size_t i = 0; i < set.per_catchment.rows(); ++i) {
        CHECK(set.per_catchment(i, c) >= -1.0);
        CHECK(set.per_catchment(i, c) <= 1.0);
      }
    }
  }
}

#include <doctest.h>

#include <cmath>

#include "insardet/covariogram.hpp"
#include "insardet/random.hpp"
#include "insardet/synth.hpp"

using namespace insardet;

TEST_CASE("covariance_at") {
  CovarianceModel m{1.0, 1.0, 2.3, 1.3};
  CHECK(covariance_at(m, 0.0) == 2.3);
  CHECK(covariance_at(m, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(covariance_at(m, 1e3) == doctest::Approx(0.0));
  CHECK_THROWS(covariance_at(m, -1.0));
  // Discontinuity at the origin equals the nugget.
  CHECK(covariance_at(m, 1e-12) == doctest::Approx(m.sill - m.nugget));
  CHECK(semivariance_at(m, 0.0) == 0.0);
}

TEST_CASE("CovarianceModel invariants") {
  const auto m = CovarianceModel::from_sill_nugget(2.0, 0.5, 1.2);
  CHECK(m.a == doctest::Approx(1.5));
  CHECK_NOTHROW(m.validate());
  CHECK_THROWS(CovarianceModel{1.0, 1.0, 2.0, 0.5}.validate());  // a != sill - nugget
  CHECK_THROWS(CovarianceModel{1.0, 0.0, 1.0, 0.0}.validate());
}

TEST_CASE("empirical_variogram basics") {
  const GridSpec g{20, 20, 100.0, 0.0, 2000.0};
  SUBCASE("constant field") {
    SparseVelocityField f(g);
    for (int r = 0; r < 20; r += 2)
      for (int c = 0; c < 20; c += 3) f.set(r, c, 4.2);
    const auto v = empirical_variogram(f, {2.0, 10, 100000, 1});
    for (std::size_t i = 0; i < v.gamma.size(); ++i)
      if (v.pair_counts[i] > 0) CHECK(v.gamma[i] == 0.0);
  }
  SUBCASE("two samples one km apart") {
    SparseVelocityField f(g);
    f.set(0, 0, 0.0);
    f.set(0, 10, 2.0);
    const auto v = empirical_variogram(f, {2.0, 10, 100, 1});
    CHECK(v.populated() == 1);
    for (std::size_t i = 0; i < v.gamma.size(); ++i)
      if (v.pair_counts[i] > 0) CHECK(v.gamma[i] == doctest::Approx(2.0));
  }
  SUBCASE("errors") {
    SparseVelocityField f(g);
    f.set(0, 0, 1.0);
    CHECK_THROWS(empirical_variogram(f, {}));
    f.set(1, 1, 1.0);
    CHECK_THROWS(empirical_variogram(f, {0.0, 10, 100, 1}));
  }
  SUBCASE("bins strictly increasing and seeded sampling deterministic") {
    SparseVelocityField f(g);
    Rng rng(5);
    std::normal_distribution<double> n;
    for (int r = 0; r < 20; ++r)
      for (int c = 0; c < 20; ++c) f.set(r, c, n(rng));
    const auto a = empirical_variogram(f, {2.0, 12, 5000, 9});
    const auto b = empirical_variogram(f, {2.0, 12, 5000, 9});
    CHECK(a.gamma.size() == 12);
    for (std::size_t i = 1; i < a.bin_centers.size(); ++i) CHECK(a.bin_centers[i] > a.bin_centers[i - 1]);
    std::uint64_t total = 0;
    for (auto c : a.pair_counts) total += c;
    CHECK(total <= 5000);
    for (std::size_t i = 0; i < a.gamma.size(); ++i)
      if (a.pair_counts[i]) CHECK(a.gamma[i] == b.gamma[i]);
  }
}

namespace {

VariogramCurve forward_curve(const CovarianceModel& m, double noise, std::uint64_t seed) {
  VariogramCurve c;
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, noise);
  for (int i = 0; i < 30; ++i) {
    const double d = 0.1 + 0.2 * i;
    c.bin_centers.push_back(d);
    c.gamma.push_back(m.sill - m.a * std::exp(-m.b * d) + n(rng));
    c.pair_counts.push_back(1000 + 50 * i);
  }
  return c;
}

}  // namespace

TEST_CASE("fit recovers forward simulated curve") {
  const CovarianceModel truth{1.0, 1.0, 2.0, 1.0};
  const auto fit = fit_exponential_covariance(forward_curve(truth, 0.005, 2));
  CHECK(fit.a == doctest::Approx(1.0).epsilon(0.2));
  CHECK(fit.b == doctest::Approx(1.0).epsilon(0.2));
  CHECK(fit.sill == doctest::Approx(2.0).epsilon(0.2));
  CHECK(fit.a == doctest::Approx(fit.sill - fit.nugget).epsilon(1e-9));
}

TEST_CASE("fit is invariant to pair-count rescaling") {
  auto c = forward_curve({1.3, 1.2, 2.1, 0.8}, 0.01, 4);
  const auto f1 = fit_exponential_covariance(c);
  for (auto& n : c.pair_counts) n *= 7;
  const auto f2 = fit_exponential_covariance(c);
  CHECK(f1.a == doctest::Approx(f2.a).epsilon(1e-9));
  CHECK(f1.b == doctest::Approx(f2.b).epsilon(1e-9));
  CHECK(f1.sill == doctest::Approx(f2.sill).epsilon(1e-9));
}

TEST_CASE("flat curve is the pure nugget limit") {
  VariogramCurve c;
  for (int i = 0; i < 10; ++i) {
    c.bin_centers.push_back(0.3 * (i + 1));
    c.gamma.push_back(1.7);
    c.pair_counts.push_back(100);
  }
  const auto m = fit_exponential_covariance(c);
  CHECK(m.a == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(m.sill == doctest::Approx(1.7).epsilon(1e-6));
  CHECK(m.nugget == doctest::Approx(1.7).epsilon(1e-6));
}

TEST_CASE("fit needs four populated bins") {
  VariogramCurve c;
  for (int i = 0; i < 3; ++i) {
    c.bin_centers.push_back(i + 1.0);
    c.gamma.push_back(1.0 + i);
    c.pair_counts.push_back(10);
  }
  CHECK_THROWS_WITH_AS(fit_exponential_covariance(c), doctest::Contains("fit failed"), std::runtime_error);
}

TEST_CASE("variogram of a UK-like atmosphere levels off at the sill") {
  // a = 1.0, sill 2.3 as in the reference variogram; 64 x 64 at 100 m.
  const CovarianceModel m = CovarianceModel::from_sill_nugget(2.3, 1.3, 1.2);
  const GridSpec g{64, 64, 100.0, 0.0, 6400.0};
  AtmosphereSampler sampler(m, g, {5000, 1100, 1e-8});
  Rng rng(21);
  VariogramCurve mean;
  const int reps = 8;
  for (int k = 0; k < reps; ++k) {
    const auto t = sampler.sample(rng);
    SparseVelocityField f(g, t.values());
    const auto v = empirical_variogram(f, {5.0, 10, 400000, 3u + k});
    if (k == 0) {
      mean = v;
      continue;
    }
    for (std::size_t i = 0; i < v.gamma.size(); ++i) mean.gamma[i] += v.gamma[i];
  }
  for (auto& g2 : mean.gamma) g2 /= reps;
  // Beyond ~2.5 km the exponential part has decayed below 5% of a.
  for (std::size_t i = 0; i < mean.gamma.size(); ++i)
    if (mean.bin_centers[i] > 2.5) CHECK(mean.gamma[i] == doctest::Approx(2.3).epsilon(0.15));
}

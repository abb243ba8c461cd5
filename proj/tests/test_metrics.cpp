#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "disperse/metrics.hpp"
#include "support/oracles.hpp"

using namespace disperse;

namespace {

Configuration CircleConfig(const std::vector<double>& angles) {
  Mat pts(2, static_cast<Index>(angles.size()));
  for (std::size_t i = 0; i < angles.size(); ++i) {
    pts(0, static_cast<Index>(i)) = std::cos(angles[i]);
    pts(1, static_cast<Index>(i)) = std::sin(angles[i]);
  }
  return Configuration(std::move(pts));
}

Configuration XxMinusxMinusx(Index m, RngStream& rng) {
  Vec x(m);
  for (Index d = 0; d < m; ++d) x(d) = rng.Gaussian();
  x.normalize();
  Mat pts(m, 4);
  pts.col(0) = x;
  pts.col(1) = x;
  pts.col(2) = -x;
  pts.col(3) = -x;
  return Configuration(std::move(pts));
}

}  // namespace

TEST_CASE("min geodesic distance") {
  RngStream rng(31);
  CHECK(MinGeodesicDistance(XxMinusxMinusx(5, rng)) < 5e-8);  // coincident pair

  const Configuration tri = CircleConfig({0.0, 2.0 * kPi / 3.0, -2.0 * kPi / 3.0});
  const auto dists = oracle::AllPairDistancesGeodesic(tri);
  const double expected = *std::min_element(dists.begin(), dists.end());
  CHECK(MinGeodesicDistance(tri) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(2.0 * kPi / 3.0).epsilon(1e-9));

  const Configuration pair = CircleConfig({0.3, 0.3 - kPi});
  CHECK(MinGeodesicDistance(pair) > kPi - 5e-8);

  Mat single = Mat::Zero(3, 1);
  single(0, 0) = 1.0;
  CHECK_THROWS_AS(MinGeodesicDistance(Configuration{single}), std::invalid_argument);
}

TEST_CASE("spherical variance") {
  RngStream rng(32);
  CHECK(SphericalVariance(XxMinusxMinusx(7, rng)) == doctest::Approx(1.0).epsilon(1e-12));

  Mat single = Mat::Zero(4, 1);
  single(1, 0) = 1.0;
  CHECK(SphericalVariance(Configuration{single}) == doctest::Approx(0.0));

  const Configuration big = SampleUniform(10000, 16, rng);
  CHECK(SphericalVariance(big) >= 0.98);
  CHECK(SphericalVariance(big) <= 1.0);

  const DispersionReport r = MakeReport(big, 42);
  CHECK(r.step == 42);
  CHECK(r.svar == doctest::Approx(1.0 - r.mean_resultant_length).epsilon(1e-14));
}

TEST_CASE("pairwise distance summary matches brute force") {
  RngStream rng(33);

  // orthonormal basis: every pair at pi/2
  const Index m = 6;
  const Configuration basis{Mat(Mat::Identity(m, m))};
  const DistanceSummary s = PairwiseDistanceSummary(basis, PairDistance::kGeodesic);
  CHECK(s.min == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(s.median == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(s.max == doctest::Approx(kPi / 2).epsilon(1e-12));

  // (x, x, -x): min 0, max pi
  Mat pts(3, 3);
  pts.col(0) = Eigen::Vector3d(0, 0, 1);
  pts.col(1) = Eigen::Vector3d(0, 0, 1);
  pts.col(2) = Eigen::Vector3d(0, 0, -1);
  const DistanceSummary s2 = PairwiseDistanceSummary(Configuration{pts}, PairDistance::kGeodesic);
  CHECK(s2.min < 5e-8);
  CHECK(s2.max > kPi - 5e-8);

  // random n=100 m=8 against the O(n^2) reference loop
  const Configuration X = SampleUniform(100, 8, rng);
  std::vector<double> ref = oracle::AllPairDistancesGeodesic(X);
  std::sort(ref.begin(), ref.end());
  const DistanceSummary s3 = PairwiseDistanceSummary(X, PairDistance::kGeodesic);
  CHECK(s3.min == doctest::Approx(ref.front()).epsilon(1e-12));
  CHECK(s3.max == doctest::Approx(ref.back()).epsilon(1e-12));
  const std::size_t cnt = ref.size();
  const double ref_median = cnt % 2 == 1 ? ref[cnt / 2] : 0.5 * (ref[cnt / 2 - 1] + ref[cnt / 2]);
  CHECK(s3.median == doctest::Approx(ref_median).epsilon(1e-12));

  // chordal variant
  const DistanceSummary s4 = PairwiseDistanceSummary(X, PairDistance::kChordal);
  std::vector<double> refc;
  for (Index i = 0; i < X.size(); ++i) {
    for (Index j = i + 1; j < X.size(); ++j) refc.push_back(ChordalDistance(X.point(i), X.point(j)));
  }
  CHECK(s4.min == doctest::Approx(*std::min_element(refc.begin(), refc.end())).epsilon(1e-10));
  CHECK(s4.max == doctest::Approx(*std::max_element(refc.begin(), refc.end())).epsilon(1e-10));
}

TEST_CASE("metrics are invariant under orthogonal transforms") {
  RngStream rng(34);
  const Index m = 5;
  const Configuration X = SampleUniform(40, m, rng);
  for (int rep = 0; rep < 10; ++rep) {
    const Mat R = oracle::RandomOrthogonal(m, rng);
    const Configuration RX{Mat(R * X.points())};
    CHECK(std::abs(MinGeodesicDistance(RX) - MinGeodesicDistance(X)) < 1e-10);
    CHECK(std::abs(SphericalVariance(RX) - SphericalVariance(X)) < 1e-10);
  }
}

TEST_CASE("per-point minimum angles") {
  const Configuration tri = CircleConfig({0.0, 2.0 * kPi / 3.0, -2.0 * kPi / 3.0});
  const Vec angles = PerPointMinAngles(tri);
  CHECK(angles.size() == 3);
  for (Index i = 0; i < 3; ++i) CHECK(angles(i) == doctest::Approx(2.0 * kPi / 3.0).epsilon(1e-9));

  RngStream rng(35);
  const Configuration X = SampleUniform(60, 4, rng);
  const Vec pp = PerPointMinAngles(X);
  double global = kPi;
  for (Index i = 0; i < X.size(); ++i) {
    double best = kPi;
    for (Index j = 0; j < X.size(); ++j) {
      if (i != j) best = std::min(best, GeodesicDistance(X.point(i), X.point(j)));
    }
    CHECK(pp(i) == doctest::Approx(best).epsilon(1e-12));
    global = std::min(global, best);
  }
  CHECK(MinGeodesicDistance(X) == doctest::Approx(global).epsilon(1e-12));
}

// The gradient-freeness of svar holds where the mean direction is collinear
// with the point (clumped and +/- x configurations); asserted here on those.
TEST_CASE("svar Riemannian gradient vanishes for collinear-mean configurations") {
  RngStream rng(36);
  const Index m = 6;
  Vec x(m);
  for (Index d = 0; d < m; ++d) x(d) = rng.Gaussian();
  x.normalize();

  auto svar_riemannian_grad_norm = [](const Configuration& X) {
    // Euclidean gradient of svar wrt x_i is -mu / (n ||mu||).
    const Vec mu = X.points().rowwise().mean();
    const Vec g = -mu / (static_cast<double>(X.size()) * mu.norm());
    double worst = 0.0;
    for (Index i = 0; i < X.size(); ++i) worst = std::max(worst, TangentProject(X.point(i), g).norm());
    return worst;
  };

  // all points coincident
  Mat clump(m, 5);
  for (Index i = 0; i < 5; ++i) clump.col(i) = x;
  CHECK(svar_riemannian_grad_norm(Configuration{clump}) < 1e-10);

  // (x, x, -x): mean is parallel to every point
  Mat pm(m, 3);
  pm.col(0) = x;
  pm.col(1) = x;
  pm.col(2) = -x;
  CHECK(svar_riemannian_grad_norm(Configuration{pm}) < 1e-10);
}

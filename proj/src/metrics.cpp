#include "disperse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace disperse {

namespace {

constexpr Index kBlock = 1024;

double PairDistanceFromCosine(PairDistance d, double t) {
  t = std::clamp(t, -1.0, 1.0);
  switch (d) {
    case PairDistance::kGeodesic:
      return std::acos(t);
    case PairDistance::kChordal:
      return std::sqrt(std::max(0.0, 2.0 - 2.0 * t));
    case PairDistance::kSquaredChordal:
      return 2.0 - 2.0 * t;
  }
  return 0.0;
}

}  // namespace

double MaxOffDiagonalCosine(const Configuration& X) {
  const Index n = X.size();
  if (n < 2) throw std::invalid_argument("MaxOffDiagonalCosine: needs n >= 2");
  const Mat& P = X.points();
  double best = -std::numeric_limits<double>::infinity();
  for (Index i0 = 0; i0 < n; i0 += kBlock) {
    const Index ib = std::min(kBlock, n - i0);
    for (Index j0 = i0; j0 < n; j0 += kBlock) {
      const Index jb = std::min(kBlock, n - j0);
      const Mat gram = P.middleCols(i0, ib).transpose() * P.middleCols(j0, jb);
      for (Index i = 0; i < ib; ++i) {
        const Index jstart = (j0 == i0) ? i + 1 : 0;
        for (Index j = jstart; j < jb; ++j) best = std::max(best, gram(i, j));
      }
    }
  }
  return best;
}

double MinGeodesicDistance(const Configuration& X) {
  if (X.size() < 2) throw std::invalid_argument("MinGeodesicDistance: needs n >= 2");
  return std::acos(std::clamp(MaxOffDiagonalCosine(X), -1.0, 1.0));
}

double MeanResultantLength(const Configuration& X) {
  return (X.points().rowwise().mean()).norm();
}

double SphericalVariance(const Configuration& X) { return 1.0 - MeanResultantLength(X); }

DispersionReport MakeReport(const Configuration& X, long step) {
  DispersionReport r;
  r.mean_resultant_length = MeanResultantLength(X);
  r.svar = 1.0 - r.mean_resultant_length;
  r.d_min = X.size() >= 2 ? MinGeodesicDistance(X) : 0.0;
  r.step = step;
  return r;
}

DistanceSummary PairwiseDistanceSummary(const Configuration& X, PairDistance d) {
  const Index n = X.size();
  if (n < 2) throw std::invalid_argument("PairwiseDistanceSummary: needs n >= 2");
  const Mat& P = X.points();
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
  for (Index i0 = 0; i0 < n; i0 += kBlock) {
    const Index ib = std::min(kBlock, n - i0);
    for (Index j0 = i0; j0 < n; j0 += kBlock) {
      const Index jb = std::min(kBlock, n - j0);
      const Mat gram = P.middleCols(i0, ib).transpose() * P.middleCols(j0, jb);
      for (Index i = 0; i < ib; ++i) {
        const Index jstart = (j0 == i0) ? i + 1 : 0;
        for (Index j = jstart; j < jb; ++j) dists.push_back(PairDistanceFromCosine(d, gram(i, j)));
      }
    }
  }
  DistanceSummary s;
  const std::size_t count = dists.size();
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(count / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  if (count % 2 == 1) {
    s.median = *mid;
  } else {
    const double hi = *mid;
    const double lo = *std::max_element(dists.begin(), mid);
    s.median = 0.5 * (lo + hi);
  }
  s.min = *std::min_element(dists.begin(), dists.end());
  s.max = *std::max_element(dists.begin(), dists.end());
  return s;
}

Vec PerPointMinAngles(const Configuration& X) {
  const Index n = X.size();
  if (n < 2) throw std::invalid_argument("PerPointMinAngles: needs n >= 2");
  const Mat& P = X.points();
  Vec best = Vec::Constant(n, -std::numeric_limits<double>::infinity());
  for (Index i0 = 0; i0 < n; i0 += kBlock) {
    const Index ib = std::min(kBlock, n - i0);
    for (Index j0 = 0; j0 < n; j0 += kBlock) {
      const Index jb = std::min(kBlock, n - j0);
      const Mat gram = P.middleCols(i0, ib).transpose() * P.middleCols(j0, jb);
      for (Index i = 0; i < ib; ++i) {
        for (Index j = 0; j < jb; ++j) {
          if (i0 + i == j0 + j) continue;
          best(i0 + i) = std::max(best(i0 + i), gram(i, j));
        }
      }
    }
  }
  for (Index i = 0; i < n; ++i) best(i) = std::acos(std::clamp(best(i), -1.0, 1.0));
  return best;
}

}  // namespace disperse

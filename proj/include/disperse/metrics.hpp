#pragma once

#include "disperse/geometry.hpp"

namespace disperse {

enum class PairDistance { kGeodesic, kChordal, kSquaredChordal };

struct DispersionReport {
  double d_min = 0.0;                  // radians
  double svar = 0.0;                   // 1 - mean resultant length
  double mean_resultant_length = 0.0;  // ||mean of points||
  long step = 0;
};

struct DistanceSummary {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

// Minimum pairwise geodesic distance. Pair cosines are computed blockwise so
// memory stays O(block^2) regardless of n. Requires n >= 2.
double MinGeodesicDistance(const Configuration& X);

// 1 - ||mean of points||, in [0, 1].
double SphericalVariance(const Configuration& X);

double MeanResultantLength(const Configuration& X);

DispersionReport MakeReport(const Configuration& X, long step);

// Exact order statistics {min, median, max} of all n(n-1)/2 pairwise
// distances. Every pair is examined (no sampling); the median uses exact
// selection over the collected distances. Requires n >= 2.
DistanceSummary PairwiseDistanceSummary(const Configuration& X, PairDistance d);

// Largest off-diagonal pairwise cosine, computed blockwise.
double MaxOffDiagonalCosine(const Configuration& X);

// Per-point minimum geodesic distance (angle to the nearest neighbor),
// in radians. Requires n >= 2.
Vec PerPointMinAngles(const Configuration& X);

}  // namespace disperse

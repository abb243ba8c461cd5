#include "disperse/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace disperse {

namespace {

// d(x,y) = D(t) with t = <x,y>; returns D(t).
double DistFromCosine(PairDistance d, double t) {
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

// D'(t); denominators are clamped so coincident/antipodal pairs stay finite
// (the radial blow-up is projected out downstream).
double DistDcos(PairDistance d, double t) {
  t = std::clamp(t, -1.0, 1.0);
  switch (d) {
    case PairDistance::kGeodesic:
      return -1.0 / std::sqrt(std::max(1.0 - t * t, 1e-14));
    case PairDistance::kChordal:
      return -1.0 / std::sqrt(std::max(2.0 - 2.0 * t, 1e-14));
    case PairDistance::kSquaredChordal:
      return -2.0;
  }
  return 0.0;
}

struct NearestNeighbors {
  std::vector<Index> index;
  std::vector<double> cosine;
};

// Nearest neighbor per point; all three distances are decreasing in the
// cosine, so the NN maximizes <x_i, x_j>. Ties break toward the lowest index.
NearestNeighbors FindNearestNeighbors(const Mat& P) {
  const Index n = P.cols();
  const Mat gram = P.transpose() * P;
  NearestNeighbors nn;
  nn.index.assign(n, 0);
  nn.cosine.assign(n, 0.0);
  for (Index i = 0; i < n; ++i) {
    double best = -2.0;
    Index best_j = -1;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      if (gram(i, j) > best) {
        best = gram(i, j);
        best_j = j;
      }
    }
    nn.index[i] = best_j;
    nn.cosine[i] = best;
  }
  return nn;
}

std::vector<Index> FullBatch(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

// Ascending ranks, stable in the original index for ties.
std::vector<Index> AscendingRanks(const std::vector<double>& v) {
  std::vector<Index> order(v.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return v[static_cast<std::size_t>(a)] < v[static_cast<std::size_t>(b)]; });
  std::vector<Index> ranks(v.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[static_cast<std::size_t>(order[r])] = static_cast<Index>(r);
  return ranks;
}

// Jacobian of the great-circle projection angle wrt the point:
// (a q - b p) / (a^2 + b^2) with a = <x,p>, b = <x,q>. Returns false at a
// degenerate pole.
bool ProjectionJacobian(const VecRef& x, const GreatCircle& c, double* theta, Vec* jac) {
  const double a = x.dot(c.p());
  const double b = x.dot(c.q());
  const double denom = a * a + b * b;
  if (denom < 1e-24) return false;
  double th = std::atan2(b, a);
  if (th >= kPi) th -= 2.0 * kPi;
  *theta = th;
  *jac = (a * c.q() - b * c.p()) / denom;
  return true;
}

void AccumulateClipped(Eigen::Ref<Eigen::VectorXd> acc, const Vec& contribution, SlicedGradStats* stats) {
  const double norm = contribution.norm();
  if (norm > kSlicedClipMax) {
    acc += contribution * (kSlicedClipMax / norm);
    if (stats != nullptr) ++stats->clipped_contributions;
  } else {
    acc += contribution;
  }
}

// Orthogonalizes g against x exactly enough that the GradientBatch tangency
// invariant (1e-8 relative) survives huge pre-projection magnitudes and
// near-cancelling accumulations: one exact-ratio projection, one scrub pass.
void MakeTangentInPlace(const VecRef& x, Eigen::Ref<Eigen::VectorXd> g) {
  g -= (x.dot(g) / x.squaredNorm()) * x;
  g -= x.dot(g) * x;
}

}  // namespace

std::string RegKindName(RegKind kind) {
  switch (kind) {
    case RegKind::kMm:
      return "mm";
    case RegKind::kKoleo:
      return "koleo";
    case RegKind::kMhe:
      return "mhe";
    case RegKind::kWi:
      return "wi";
    case RegKind::kLloyd:
      return "lloyd";
    case RegKind::kSliced:
      return "sliced";
    case RegKind::kSsw:
      return "ssw";
  }
  return "?";
}

RegularizerSpec RegularizerSpec::Parse(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = text.find(':', start);
    if (colon == std::string::npos) {
      parts.push_back(text.substr(start));
      break;
    }
    parts.push_back(text.substr(start, colon - start));
    start = colon + 1;
  }
  if (parts.empty() || parts[0].empty()) throw std::invalid_argument("regularizer: empty spec");

  RegularizerSpec spec;
  const std::string& kind = parts[0];
  auto parse_count = [&](const std::string& s, const char* what) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size() || v < 1) throw std::invalid_argument("bad");
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("regularizer: bad ") + what + " in '" + text + "'");
    }
  };
  auto parse_distance = [&](const std::string& s) {
    if (s == "geodesic") return PairDistance::kGeodesic;
    if (s == "chordal") return PairDistance::kChordal;
    if (s == "sqchordal" || s == "squared-chordal") return PairDistance::kSquaredChordal;
    throw std::invalid_argument("regularizer: unknown distance '" + s + "'");
  };

  if (kind == "mm" || kind == "koleo") {
    spec.kind = kind == "mm" ? RegKind::kMm : RegKind::kKoleo;
    if (parts.size() > 1 && !parts[1].empty()) spec.distance = parse_distance(parts[1]);
    if (parts.size() > 2) throw std::invalid_argument("regularizer: too many fields in '" + text + "'");
  } else if (kind == "mhe" || kind == "wi") {
    spec.kind = kind == "mhe" ? RegKind::kMhe : RegKind::kWi;
    if (parts.size() < 2) throw std::invalid_argument("regularizer: '" + kind + "' needs a kernel");
    std::string kspec = parts[1];
    if (parts.size() > 2) kspec += ":" + parts[2];
    if (parts.size() > 3) throw std::invalid_argument("regularizer: too many fields in '" + text + "'");
    spec.kernel = Kernel::Parse(kspec);
  } else if (kind == "lloyd") {
    spec.kind = RegKind::kLloyd;
    if (parts.size() > 1 && !parts[1].empty()) spec.lloyd_samples = parse_count(parts[1], "sample count");
    if (parts.size() > 2) throw std::invalid_argument("regularizer: too many fields in '" + text + "'");
  } else if (kind == "sliced" || kind == "ssw") {
    spec.kind = kind == "sliced" ? RegKind::kSliced : RegKind::kSsw;
    if (spec.kind == RegKind::kSsw) spec.circles_per_step = 50;  // default projection count
    std::size_t next = 1;
    if (parts.size() > next && !parts[next].empty() && !std::isdigit(static_cast<unsigned char>(parts[next][0]))) {
      if (parts[next] == "axis" || parts[next] == "axis-aligned") {
        spec.circle_mode = CircleMode::kAxisAligned;
      } else if (parts[next] == "uniform") {
        spec.circle_mode = CircleMode::kUniform;
      } else {
        throw std::invalid_argument("regularizer: unknown circle mode '" + parts[next] + "'");
      }
      ++next;
    }
    if (parts.size() > next && !parts[next].empty()) {
      spec.circles_per_step = parse_count(parts[next], "circle count");
      ++next;
    }
    if (parts.size() > next) throw std::invalid_argument("regularizer: too many fields in '" + text + "'");
  } else {
    throw std::invalid_argument("regularizer: unknown kind '" + kind + "'");
  }
  return spec;
}

std::string RegularizerSpec::ToString() const {
  std::string s = RegKindName(kind);
  switch (kind) {
    case RegKind::kMm:
    case RegKind::kKoleo:
      s += distance == PairDistance::kGeodesic    ? ":geodesic"
           : distance == PairDistance::kChordal   ? ":chordal"
                                                  : ":sqchordal";
      break;
    case RegKind::kMhe:
    case RegKind::kWi:
      s += ":" + kernel->ToString();
      break;
    case RegKind::kLloyd:
      s += ":" + std::to_string(lloyd_samples);
      break;
    case RegKind::kSliced:
    case RegKind::kSsw:
      s += circle_mode == CircleMode::kAxisAligned ? ":axis" : ":uniform";
      s += ":" + std::to_string(circles_per_step);
      break;
  }
  return s;
}

// ---- Pairwise -----------------------------------------------------------------

double LossMm(const Configuration& X, PairDistance d) {
  const Index n = X.size();
  if (n < 2) throw std::invalid_argument("LossMm: needs n >= 2");
  const NearestNeighbors nn = FindNearestNeighbors(X.points());
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) sum += DistFromCosine(d, nn.cosine[static_cast<std::size_t>(i)]);
  return -sum / static_cast<double>(n);
}

double LossKoleo(const Configuration& X, PairDistance d) {
  const Index n = X.size();
  if (n < 2) throw std::invalid_argument("LossKoleo: needs n >= 2");
  const NearestNeighbors nn = FindNearestNeighbors(X.points());
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double dist = DistFromCosine(d, nn.cosine[static_cast<std::size_t>(i)]);
    if (dist <= 0.0) throw std::domain_error("LossKoleo: coincident points (log 0)");
    sum += std::log(dist);
  }
  return -sum / static_cast<double>(n);
}

double LossMhe(const Configuration& X, const Kernel& k, bool unnormalized) {
  const Index n = X.size();
  if (n < 2) throw std::invalid_argument("LossMhe: needs n >= 2");
  const Mat gram = X.points().transpose() * X.points();
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      sum += KernelEval(k, std::clamp(gram(i, j), -1.0, 1.0));
    }
  }
  if (unnormalized) return sum;
  return sum / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double LossWi(const Configuration& X, const Kernel& k) {
  const Index n = X.size();
  const Mat gram = X.points().transpose() * X.points();
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) sum += KernelEval(k, std::clamp(gram(i, j), -1.0, 1.0));
  }
  return std::log(sum / (static_cast<double>(n) * static_cast<double>(n)));
}

double LossMmdEstimate(const Configuration& X, const Kernel& k) {
  return LossMhe(X, k) - MmdConstant(k, X.dim());
}

Mat GradPairwiseEuclidean(const Configuration& X, const RegularizerSpec& spec,
                          const std::vector<Index>& batch) {
  const std::vector<Index>& idx = batch;
  const Configuration sub = idx.empty() ? X : X.Subset(idx);
  const Index k = sub.size();
  if (k < 2) throw std::invalid_argument("GradPairwiseEuclidean: batch needs >= 2 points");
  const Mat& P = sub.points();
  Mat grad = Mat::Zero(sub.dim(), k);

  switch (spec.kind) {
    case RegKind::kMm:
    case RegKind::kKoleo: {
      const NearestNeighbors nn = FindNearestNeighbors(P);
      const double inv_n = 1.0 / static_cast<double>(k);
      for (Index i = 0; i < k; ++i) {
        const Index j = nn.index[static_cast<std::size_t>(i)];
        const double t = nn.cosine[static_cast<std::size_t>(i)];
        double coeff = -inv_n;
        if (spec.kind == RegKind::kKoleo) {
          const double dist = DistFromCosine(spec.distance, t);
          if (dist <= 0.0) throw std::domain_error("GradPairwise: coincident points (log 0)");
          coeff /= dist;
        }
        const double dcos = DistDcos(spec.distance, t);
        grad.col(i) += coeff * dcos * P.col(j);
        grad.col(j) += coeff * dcos * P.col(i);
      }
      break;
    }
    case RegKind::kMhe:
    case RegKind::kWi: {
      const Kernel& kern = *spec.kernel;
      const Mat gram = P.transpose() * P;
      Mat w = Mat::Zero(k, k);
      double total = 0.0;
      for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j < k; ++j) {
          if (i == j) continue;
          const double t = std::clamp(gram(i, j), -(1.0 - 1e-15), 1.0 - 1e-15);
          w(i, j) = KernelDcos(kern, t);
          if (spec.kind == RegKind::kWi) total += KernelEval(kern, std::clamp(gram(i, j), -1.0, 1.0));
        }
      }
      double scale;
      if (spec.kind == RegKind::kMhe) {
        scale = spec.mhe_unnormalized ? 2.0 : 2.0 / (static_cast<double>(k) * static_cast<double>(k - 1));
      } else {
        for (Index i = 0; i < k; ++i) total += KernelEval(kern, 1.0);
        // d log(S)/dx with S the full double-sum mean; the diagonal term is
        // radial and is dropped here.
        scale = 2.0 / total;
      }
      grad = scale * (P * w);
      break;
    }
    default:
      throw std::invalid_argument("GradPairwiseEuclidean: not a pairwise regularizer");
  }
  return grad;
}

GradientBatch GradPairwise(const Configuration& X, const RegularizerSpec& spec,
                           const std::vector<Index>& batch, Mat* euclidean_out) {
  GradientBatch out;
  out.indices = batch.empty() ? FullBatch(X.size()) : batch;
  Mat euclid = GradPairwiseEuclidean(X, spec, out.indices);
  out.tangents = euclid;
  for (std::size_t c = 0; c < out.indices.size(); ++c) {
    MakeTangentInPlace(X.point(out.indices[c]), out.tangents.col(static_cast<Index>(c)));
  }
  if (euclidean_out != nullptr) *euclidean_out = std::move(euclid);
  return out;
}

// ---- Lloyd --------------------------------------------------------------------

std::vector<Index> LloydAssignment(const Configuration& X, const Configuration& samples) {
  if (X.dim() != samples.dim()) throw std::invalid_argument("LloydAssignment: dimension mismatch");
  const Index n = X.size();
  const Index ns = samples.size();
  const Mat cos = X.points().transpose() * samples.points();  // n x ns
  std::vector<Index> assign(static_cast<std::size_t>(ns), 0);
  for (Index s = 0; s < ns; ++s) {
    double best = -2.0;
    Index best_i = 0;
    for (Index i = 0; i < n; ++i) {
      if (cos(i, s) > best) {
        best = cos(i, s);
        best_i = i;
      }
    }
    assign[static_cast<std::size_t>(s)] = best_i;
  }
  return assign;
}

double LossLloydAssigned(const Configuration& X, const Configuration& samples,
                         const std::vector<Index>& assignment) {
  const Index ns = samples.size();
  if (ns < 1) throw std::invalid_argument("LossLloyd: empty sample set");
  double sum = 0.0;
  for (Index s = 0; s < ns; ++s) {
    const double d = GeodesicDistance(X.point(assignment[static_cast<std::size_t>(s)]), samples.point(s));
    sum += 0.5 * d * d;
  }
  return sum / static_cast<double>(ns);
}

double LossLloyd(const Configuration& X, const Configuration& samples) {
  return LossLloydAssigned(X, samples, LloydAssignment(X, samples));
}

GradientBatch GradLloyd(const Configuration& X, const Configuration& samples, LloydGradStats* stats,
                        Mat* euclidean_out) {
  const Index ns = samples.size();
  if (ns < 1) throw std::invalid_argument("GradLloyd: empty sample set");
  const std::vector<Index> assign = LloydAssignment(X, samples);
  GradientBatch out;
  out.indices = FullBatch(X.size());
  out.tangents = Mat::Zero(X.dim(), X.size());
  if (euclidean_out != nullptr) *euclidean_out = Mat::Zero(X.dim(), X.size());
  const double inv = 1.0 / static_cast<double>(ns);
  for (Index s = 0; s < ns; ++s) {
    const Index i = assign[static_cast<std::size_t>(s)];
    const auto x = X.point(i);
    const auto y = samples.point(s);
    const double theta = GeodesicDistance(x, y);
    if (theta > kPi - kAntipodalTol) {
      if (stats != nullptr) ++stats->skipped_antipodal;
      continue;
    }
    out.tangents.col(i) -= inv * LogMap(x, y);
    if (euclidean_out != nullptr && theta > 1e-12) {
      // ambient gradient of 1/2 d^2(y, x) wrt x, radial component included
      euclidean_out->col(i) -= inv * (theta / std::sin(theta)) * y;
    }
  }
  for (Index i = 0; i < X.size(); ++i) MakeTangentInPlace(X.point(i), out.tangents.col(i));
  return out;
}

// ---- Sliced -------------------------------------------------------------------

std::pair<std::vector<double>, double> ProjectCircularDispersed(const std::vector<double>& thetas) {
  const std::size_t n = thetas.size();
  if (n == 0) throw std::invalid_argument("ProjectCircularDispersed: empty input");
  const double nd = static_cast<double>(n);
  const double tau = std::accumulate(thetas.begin(), thetas.end(), 0.0) / nd;
  const std::vector<Index> ranks = AscendingRanks(thetas);
  std::vector<double> targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = static_cast<double>(ranks[i] + 1);  // 1-based rank
    const double phi = -kPi * (nd + 1.0) / nd + 2.0 * kPi * k / nd;
    targets[i] = tau + phi;
  }
  return {std::move(targets), tau};
}

std::vector<double> ProjectConfiguration(const Configuration& X, const GreatCircle& c,
                                         std::vector<bool>* degenerate) {
  const Index n = X.size();
  std::vector<double> thetas(static_cast<std::size_t>(n));
  if (degenerate != nullptr) degenerate->assign(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < n; ++i) {
    bool deg = false;
    thetas[static_cast<std::size_t>(i)] = ProjectGreatCircle(X.point(i), c, &deg);
    if (deg && degenerate != nullptr) (*degenerate)[static_cast<std::size_t>(i)] = true;
  }
  return thetas;
}

double LossSliced(const Configuration& X, const std::vector<GreatCircle>& circles) {
  if (circles.empty()) throw std::invalid_argument("LossSliced: no circles");
  double total = 0.0;
  for (const GreatCircle& c : circles) {
    const std::vector<double> thetas = ProjectConfiguration(X, c);
    const auto [targets, tau] = ProjectCircularDispersed(thetas);
    (void)tau;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      const double diff = thetas[i] - targets[i];
      total += 0.5 * diff * diff;
    }
  }
  return total / static_cast<double>(circles.size());
}

double LossSlicedWithTargets(const Configuration& X, const std::vector<GreatCircle>& circles,
                             const std::vector<std::vector<double>>& targets) {
  if (circles.size() != targets.size()) throw std::invalid_argument("LossSlicedWithTargets: size mismatch");
  double total = 0.0;
  for (std::size_t ci = 0; ci < circles.size(); ++ci) {
    const std::vector<double> thetas = ProjectConfiguration(X, circles[ci]);
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      const double diff = thetas[i] - targets[ci][i];
      total += 0.5 * diff * diff;
    }
  }
  return total / static_cast<double>(circles.size());
}

GradientBatch GradSliced(const Configuration& X, const std::vector<GreatCircle>& circles,
                         SlicedGradStats* stats) {
  if (circles.empty()) throw std::invalid_argument("GradSliced: no circles");
  const Index n = X.size();
  GradientBatch out;
  out.indices = FullBatch(n);
  out.tangents = Mat::Zero(X.dim(), n);
  const double inv = 1.0 / static_cast<double>(circles.size());
  Vec jac(X.dim());
  for (const GreatCircle& c : circles) {
    const std::vector<double> thetas = ProjectConfiguration(X, c);
    const auto [targets, tau] = ProjectCircularDispersed(thetas);
    (void)tau;
    for (Index i = 0; i < n; ++i) {
      double theta = 0.0;
      if (!ProjectionJacobian(X.point(i), c, &theta, &jac)) {
        if (stats != nullptr) ++stats->degenerate_projections;
        continue;
      }
      const double coeff = thetas[static_cast<std::size_t>(i)] - targets[static_cast<std::size_t>(i)];
      AccumulateClipped(out.tangents.col(i), Vec(inv * coeff * jac), stats);
    }
  }
  for (Index i = 0; i < n; ++i) MakeTangentInPlace(X.point(i), out.tangents.col(i));
  return out;
}

// ---- SSW ----------------------------------------------------------------------

double CircularW2Uniform(const std::vector<double>& unit_coords) {
  const std::size_t n = unit_coords.size();
  if (n == 0) throw std::invalid_argument("CircularW2Uniform: empty input");
  std::vector<double> s(unit_coords);
  std::sort(s.begin(), s.end());
  const double nd = static_cast<double>(n);
  double sq = 0.0;
  double mean = 0.0;
  double lin = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sq += s[j] * s[j];
    mean += s[j];
    lin += (nd - 1.0 - 2.0 * static_cast<double>(j)) * s[j];
  }
  mean /= nd;
  return sq / nd - mean * mean + lin / (nd * nd) + 1.0 / 12.0;
}

namespace {

std::vector<double> UnitCoords(const std::vector<double>& thetas) {
  std::vector<double> t(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) t[i] = (thetas[i] + kPi) / (2.0 * kPi);
  return t;
}

double SswCircleLossFromRanks(const std::vector<double>& coords, const std::vector<Index>& ranks) {
  const double nd = static_cast<double>(coords.size());
  double sq = 0.0;
  double mean = 0.0;
  double lin = 0.0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    sq += coords[i] * coords[i];
    mean += coords[i];
    lin += (nd - 1.0 - 2.0 * static_cast<double>(ranks[i])) * coords[i];
  }
  mean /= nd;
  return sq / nd - mean * mean + lin / (nd * nd) + 1.0 / 12.0;
}

}  // namespace

double LossSsw(const Configuration& X, const std::vector<GreatCircle>& circles) {
  if (circles.empty()) throw std::invalid_argument("LossSsw: no circles");
  double total = 0.0;
  for (const GreatCircle& c : circles) {
    total += CircularW2Uniform(UnitCoords(ProjectConfiguration(X, c)));
  }
  return total / static_cast<double>(circles.size());
}

double LossSswWithRanks(const Configuration& X, const std::vector<GreatCircle>& circles,
                        const std::vector<std::vector<Index>>& ranks) {
  if (circles.size() != ranks.size()) throw std::invalid_argument("LossSswWithRanks: size mismatch");
  double total = 0.0;
  for (std::size_t ci = 0; ci < circles.size(); ++ci) {
    total += SswCircleLossFromRanks(UnitCoords(ProjectConfiguration(X, circles[ci])), ranks[ci]);
  }
  return total / static_cast<double>(circles.size());
}

GradientBatch GradSsw(const Configuration& X, const std::vector<GreatCircle>& circles,
                      SlicedGradStats* stats) {
  if (circles.empty()) throw std::invalid_argument("GradSsw: no circles");
  const Index n = X.size();
  const double nd = static_cast<double>(n);
  GradientBatch out;
  out.indices = FullBatch(n);
  out.tangents = Mat::Zero(X.dim(), n);
  const double inv = 1.0 / static_cast<double>(circles.size());
  Vec jac(X.dim());
  for (const GreatCircle& c : circles) {
    const std::vector<double> thetas = ProjectConfiguration(X, c);
    const std::vector<double> coords = UnitCoords(thetas);
    const std::vector<Index> ranks = AscendingRanks(coords);
    const double mean = std::accumulate(coords.begin(), coords.end(), 0.0) / nd;
    for (Index i = 0; i < n; ++i) {
      double theta = 0.0;
      if (!ProjectionJacobian(X.point(i), c, &theta, &jac)) {
        if (stats != nullptr) ++stats->degenerate_projections;
        continue;
      }
      const std::size_t ii = static_cast<std::size_t>(i);
      const double dw_dt = 2.0 * (coords[ii] - mean) / nd + (nd - 1.0 - 2.0 * static_cast<double>(ranks[ii])) / (nd * nd);
      const double coeff = dw_dt / (2.0 * kPi);  // dt/dtheta
      AccumulateClipped(out.tangents.col(i), Vec(inv * coeff * jac), stats);
    }
  }
  for (Index i = 0; i < n; ++i) MakeTangentInPlace(X.point(i), out.tangents.col(i));
  return out;
}

// ---- Dispatch -----------------------------------------------------------------

std::vector<Index> SampleIndices(Index n, Index k, RngStream& rng) {
  if (k > n) throw std::invalid_argument("SampleIndices: k > n");
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    const Index j = i + static_cast<Index>(rng.Below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

namespace {

std::vector<GreatCircle> DrawCircles(Index m, const RegularizerSpec& spec, RngStream& rng) {
  std::vector<GreatCircle> circles;
  circles.reserve(static_cast<std::size_t>(spec.circles_per_step));
  for (int i = 0; i < spec.circles_per_step; ++i) circles.push_back(SampleGreatCircle(m, spec.circle_mode, rng));
  return circles;
}

}  // namespace

double EvalLoss(const Configuration& X, const RegularizerSpec& spec, RngStream& rng) {
  switch (spec.kind) {
    case RegKind::kMm:
      return LossMm(X, spec.distance);
    case RegKind::kKoleo:
      return LossKoleo(X, spec.distance);
    case RegKind::kMhe:
      return LossMhe(X, *spec.kernel, spec.mhe_unnormalized);
    case RegKind::kWi:
      return LossWi(X, *spec.kernel);
    case RegKind::kLloyd: {
      Configuration samples = SampleUniform(spec.lloyd_samples, X.dim(), rng);
      return LossLloyd(X, samples);
    }
    case RegKind::kSliced:
      return LossSliced(X, DrawCircles(X.dim(), spec, rng));
    case RegKind::kSsw:
      return LossSsw(X, DrawCircles(X.dim(), spec, rng));
  }
  throw std::logic_error("EvalLoss: unreachable");
}

GradientBatch EvalGradient(const Configuration& X, const RegularizerSpec& spec,
                           const std::vector<Index>& batch, RngStream& rng, Mat* euclidean_out) {
  switch (spec.kind) {
    case RegKind::kMm:
    case RegKind::kKoleo:
    case RegKind::kMhe:
    case RegKind::kWi:
      return GradPairwise(X, spec, batch, euclidean_out);
    case RegKind::kLloyd: {
      Configuration samples = SampleUniform(spec.lloyd_samples, X.dim(), rng);
      GradientBatch gb;
      if (batch.empty()) {
        gb = GradLloyd(X, samples, nullptr, euclidean_out);
      } else {
        // Minibatch restricts the regularizer to the sub-configuration.
        const Configuration sub = X.Subset(batch);
        gb = GradLloyd(sub, samples, nullptr, euclidean_out);
        gb.indices = batch;
      }
      return gb;
    }
    case RegKind::kSliced: {
      GradientBatch gb = GradSliced(X, DrawCircles(X.dim(), spec, rng));
      if (euclidean_out != nullptr) *euclidean_out = gb.tangents;
      return gb;
    }
    case RegKind::kSsw: {
      GradientBatch gb = GradSsw(X, DrawCircles(X.dim(), spec, rng));
      if (euclidean_out != nullptr) *euclidean_out = gb.tangents;
      return gb;
    }
  }
  throw std::logic_error("EvalGradient: unreachable");
}

}  // namespace disperse

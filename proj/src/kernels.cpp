#include "disperse/kernels.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace disperse {

namespace {

struct ParsedName {
  KernelFamily family;
  SphereMetric metric;
};

ParsedName ParseName(const std::string& name) {
  if (name == "rbf-chordal") return {KernelFamily::kRbf, SphereMetric::kChordal};
  if (name == "rbf-geodesic") return {KernelFamily::kRbf, SphereMetric::kGeodesic};
  if (name == "laplace-chordal") return {KernelFamily::kLaplace, SphereMetric::kChordal};
  if (name == "laplace-geodesic") return {KernelFamily::kLaplace, SphereMetric::kGeodesic};
  if (name == "riesz-chordal") return {KernelFamily::kRiesz, SphereMetric::kChordal};
  if (name == "riesz-geodesic") return {KernelFamily::kRiesz, SphereMetric::kGeodesic};
  throw std::invalid_argument("kernel: unknown family-metric '" + name + "'");
}

std::string FamilyName(KernelFamily f) {
  switch (f) {
    case KernelFamily::kRbf:
      return "rbf";
    case KernelFamily::kLaplace:
      return "laplace";
    case KernelFamily::kRiesz:
      return "riesz";
  }
  return "?";
}

std::string MetricName(SphereMetric m) {
  return m == SphereMetric::kGeodesic ? "geodesic" : "chordal";
}

// 15-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr int kGlOrder = 15;
constexpr double kGlNodes[kGlOrder] = {
    -0.9879925180204854, -0.9372733924007060, -0.8482065834104272, -0.7244177313601701,
    -0.5709721726085388, -0.3941513470775634, -0.2011940939974345, 0.0,
    0.2011940939974345,  0.3941513470775634,  0.5709721726085388,  0.7244177313601701,
    0.8482065834104272,  0.9372733924007060,  0.9879925180204854};
constexpr double kGlWeights[kGlOrder] = {
    0.0307532419961173, 0.0703660474881081, 0.1071592204671719, 0.1395706779261543,
    0.1662692058169939, 0.1861610000155622, 0.1984314853271116, 0.2025782419255613,
    0.1984314853271116, 0.1861610000155622, 0.1662692058169939, 0.1395706779261543,
    0.1071592204671719, 0.0703660474881081, 0.0307532419961173};

double Gl15(const std::function<double(double)>& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (int i = 0; i < kGlOrder; ++i) sum += kGlWeights[i] * f(mid + half * kGlNodes[i]);
  return half * sum;
}

// Adaptive bisection with a panel budget; a panel is accepted when halving it
// changes the estimate by less than its length-proportional share of the
// global tolerance.
double AdaptiveQuadrature(const std::function<double(double)>& f, double a, double b, double rel_tol,
                          int max_panels) {
  struct Panel {
    double a, b, estimate;
  };
  const double whole = Gl15(f, a, b);
  std::vector<Panel> stack{{a, b, whole}};
  double result = 0.0;
  int panels = 0;
  const double scale = std::max(std::abs(whole), 1e-300);
  while (!stack.empty()) {
    if (++panels > max_panels) {
      throw std::runtime_error("MmdConstant: quadrature did not converge within panel budget");
    }
    Panel p = stack.back();
    stack.pop_back();
    const double mid = 0.5 * (p.a + p.b);
    const double left = Gl15(f, p.a, mid);
    const double right = Gl15(f, mid, p.b);
    const double err = std::abs(left + right - p.estimate);
    const double local_tol = rel_tol * scale * (p.b - p.a) / (b - a);
    if (err <= std::max(local_tol, 1e-16 * scale) || (p.b - p.a) < 1e-13) {
      result += left + right;
    } else {
      stack.push_back({p.a, mid, left});
      stack.push_back({mid, p.b, right});
    }
  }
  return result;
}

}  // namespace

Kernel Kernel::Parse(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = colon == std::string::npos ? spec : spec.substr(0, colon);
  const ParsedName parsed = ParseName(name);
  Kernel k{parsed.family, parsed.metric, 1.0};
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      k.param = std::stod(spec.substr(colon + 1), &used);
      if (used != spec.size() - colon - 1) throw std::invalid_argument("trailing garbage");
    } catch (const std::exception&) {
      throw std::invalid_argument("kernel: bad parameter in '" + spec + "'");
    }
  }
  ValidateKernel(k);
  return k;
}

std::string Kernel::ToString() const {
  std::string s = FamilyName(family) + "-" + MetricName(metric) + ":";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", param);
  return s + buf;
}

std::string Kernel::PositiveDefiniteNote() const {
  switch (family) {
    case KernelFamily::kRbf:
      return metric == SphereMetric::kChordal ? "positive definite"
                                              : "NOT positive definite on the sphere";
    case KernelFamily::kLaplace:
      return "positive definite";
    case KernelFamily::kRiesz:
      return "conditionally positive definite for s < m-1";
  }
  return "";
}

bool Kernel::SingularAtCoincidence() const {
  return family == KernelFamily::kRiesz && metric == SphereMetric::kGeodesic;
}

void ValidateKernel(const Kernel& k) {
  if (k.family == KernelFamily::kRiesz) {
    if (k.param < 0.0) throw std::invalid_argument("kernel: Riesz needs s >= 0");
  } else {
    if (k.param <= 0.0) throw std::invalid_argument("kernel: gamma must be > 0");
  }
}

double KernelEval(const Kernel& k, double t, bool* clamped) {
  if (t < -1.0 || t > 1.0) throw std::domain_error("KernelEval: t must be in [-1, 1]");
  if (clamped != nullptr) *clamped = false;
  const double g = k.param;
  switch (k.family) {
    case KernelFamily::kRbf:
      if (k.metric == SphereMetric::kChordal) return std::exp(g * t);
      {
        const double th = std::acos(t);
        return std::exp(-g * th * th);
      }
    case KernelFamily::kLaplace:
      if (k.metric == SphereMetric::kChordal) return std::exp(-g * std::sqrt(2.0 - t));
      return std::exp(-g * std::acos(t));
    case KernelFamily::kRiesz:
      if (k.metric == SphereMetric::kGeodesic) {
        double th = std::acos(t);
        if (th < kRieszSingularEps) {
          th = kRieszSingularEps;
          if (clamped != nullptr) *clamped = true;
        }
        return g == 0.0 ? -std::log(th) : std::pow(th, -g);
      }
      return g == 0.0 ? -0.5 * std::log(2.0 - t) : std::pow(2.0 - t, -0.5 * g);
  }
  return 0.0;
}

double KernelDcos(const Kernel& k, double t) {
  if (t <= -1.0 || t >= 1.0) {
    throw std::domain_error("KernelDcos: t must be strictly inside (-1, 1)");
  }
  const double g = k.param;
  const double dacos = 1.0 / std::sqrt(1.0 - t * t);  // -d(arccos t)/dt
  switch (k.family) {
    case KernelFamily::kRbf:
      if (k.metric == SphereMetric::kChordal) return g * std::exp(g * t);
      {
        const double th = std::acos(t);
        return 2.0 * g * th * dacos * std::exp(-g * th * th);
      }
    case KernelFamily::kLaplace:
      if (k.metric == SphereMetric::kChordal) {
        const double s = std::sqrt(2.0 - t);
        return 0.5 * g / s * std::exp(-g * s);
      }
      return g * dacos * std::exp(-g * std::acos(t));
    case KernelFamily::kRiesz:
      if (k.metric == SphereMetric::kGeodesic) {
        const double th = std::acos(t);
        if (th < kRieszSingularEps) return 0.0;  // flat inside the clamp region
        if (g == 0.0) return dacos / th;
        return g * std::pow(th, -g - 1.0) * dacos;
      }
      if (g == 0.0) return 0.5 / (2.0 - t);
      return 0.5 * g * std::pow(2.0 - t, -0.5 * g - 1.0);
  }
  return 0.0;
}

double LogBeta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double MmdConstant(const Kernel& k, Index m, int max_panels) {
  if (m < 2) throw std::invalid_argument("MmdConstant: m must be >= 2");
  ValidateKernel(k);
  const double md = static_cast<double>(m);
  const bool riesz_geo = k.family == KernelFamily::kRiesz && k.metric == SphereMetric::kGeodesic;
  if (riesz_geo && k.param >= md - 1.0) {
    throw std::invalid_argument("MmdConstant: Riesz-geodesic with s >= m-1 is not integrable");
  }

  double integral = 0.0;
  if (riesz_geo && k.param > 0.0) {
    // In angle coordinates the integral is int_0^pi theta^{-s} sin(theta)^{m-2}
    // dtheta. The substitution theta = y^{1/alpha} with alpha = m-1-s gives the
    // bounded integrand (1/alpha) (sin(theta)/theta)^{m-2} on [0, pi^alpha].
    const double s = k.param;
    const double alpha = md - 1.0 - s;
    auto integrand = [&](double y) {
      const double theta = std::pow(y, 1.0 / alpha);
      const double ratio = theta < 1e-8 ? 1.0 : std::sin(theta) / theta;
      return std::pow(ratio, md - 2.0) / alpha;
    };
    integral = AdaptiveQuadrature(integrand, 0.0, std::pow(kPi, alpha), 1e-9, max_panels);
  } else if (riesz_geo) {
    // s = 0: log kernel, -log(theta) sin(theta)^(m-2); the log endpoint is
    // mild enough for plain bisection.
    auto integrand = [&](double theta) {
      if (theta <= 0.0) return 0.0;
      return -std::log(theta) * std::pow(std::sin(theta), md - 2.0);
    };
    integral = AdaptiveQuadrature(integrand, 0.0, kPi, 1e-9, max_panels);
  } else {
    // Substitute t = sin(u): the weight becomes cos(u)^(m-2) on (-pi/2, pi/2),
    // smooth at the endpoints even for m = 2.
    auto integrand = [&](double u) {
      const double t = std::clamp(std::sin(u), -1.0, 1.0);
      const double c = std::cos(u);
      return KernelEval(k, t) * std::pow(std::max(c, 0.0), md - 2.0);
    };
    integral = AdaptiveQuadrature(integrand, -kPi / 2.0, kPi / 2.0, 1e-9, max_panels);
  }
  return integral / std::exp(LogBeta(0.5, (md - 1.0) / 2.0));
}

}  // namespace disperse

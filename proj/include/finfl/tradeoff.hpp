//
// Copyright 2026 The finfl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Trade-off functions: the map from a permitted type-I error alpha to the
// smallest type-II error beta of any test between two distributions.
//
// A TradeoffCurve is stored as a piecewise-linear function through sorted
// (alpha, beta) points spanning alpha = 0 .. 1. Gaussian curves G_mu have the
// closed form beta = Phi(Phi^-1(1 - alpha) - mu).

#ifndef FINFL_TRADEOFF_HPP_
#define FINFL_TRADEOFF_HPP_

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "finfl/io.hpp"
#include "finfl/normal.hpp"

namespace finfl {

struct CurvePoint {
  double alpha = 0.0;
  double beta = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

// Signed separation, in standard deviations, between N(0,1) and N(mu,1).
struct GaussianInfluence {
  double mu = 0.0;
};

namespace internal {

constexpr double kCurveTolerance = 1e-12;

inline double cross(const CurvePoint& o, const CurvePoint& a, const CurvePoint& b) {
  return (a.alpha - o.alpha) * (b.beta - o.beta) - (a.beta - o.beta) * (b.alpha - o.alpha);
}

// Sorts by alpha and keeps the smallest beta for repeated alphas.
inline std::vector<CurvePoint> sort_and_merge(std::vector<CurvePoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) {
    return a.alpha < b.alpha || (a.alpha == b.alpha && a.beta < b.beta);
  });
  std::vector<CurvePoint> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    if (out.empty() || p.alpha != out.back().alpha) out.push_back(p);
  }
  return out;
}

// Lower convex hull (Andrew's monotone chain) of points sorted by alpha.
inline std::vector<CurvePoint> lower_hull(const std::vector<CurvePoint>& sorted) {
  std::vector<CurvePoint> hull;
  hull.reserve(sorted.size());
  for (const auto& p : sorted) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) <= 0.0) {
      hull.pop_back();
    }
    hull.push_back(p);
  }
  return hull;
}

}  // namespace internal

class TradeoffCurve {
 public:
  // Validates every curve invariant; throws std::invalid_argument otherwise.
  explicit TradeoffCurve(std::vector<CurvePoint> points,
                         double tolerance = internal::kCurveTolerance)
      : points_(std::move(points)) {
    validate(tolerance);
  }

  // Lower convex envelope of an arbitrary (alpha, beta) scatter in [0,1]^2.
  // The corners (0, 1) and (1, 0) are always included: they are achieved by
  // the tests that never and always reject.
  static TradeoffCurve convexify(std::vector<CurvePoint> scatter) {
    scatter.push_back({0.0, 1.0});
    scatter.push_back({1.0, 0.0});
    for (auto& p : scatter) {
      p.alpha = std::clamp(p.alpha, 0.0, 1.0);
      p.beta = std::clamp(p.beta, 0.0, 1.0);
    }
    return TradeoffCurve(internal::lower_hull(internal::sort_and_merge(std::move(scatter))));
  }

  std::span<const CurvePoint> points() const { return points_; }

  // Piecewise-linear interpolation; alpha is clamped to [0, 1].
  double operator()(double alpha) const {
    alpha = std::clamp(alpha, 0.0, 1.0);
    auto hi = std::upper_bound(points_.begin(), points_.end(), alpha,
                               [](double a, const CurvePoint& p) { return a < p.alpha; });
    if (hi == points_.end()) return points_.back().beta;
    auto lo = hi - 1;
    const double w = (alpha - lo->alpha) / (hi->alpha - lo->alpha);
    return lo->beta + w * (hi->beta - lo->beta);
  }

 private:
  void validate(double tolerance) const {
    if (points_.size() < 2) throw std::invalid_argument("trade-off curve needs >= 2 points");
    if (points_.front().alpha != 0.0 || points_.back().alpha != 1.0) {
      throw std::invalid_argument("trade-off curve must span alpha = 0 .. 1");
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& p = points_[i];
      if (!(p.beta >= 0.0 && p.beta <= 1.0)) {
        throw std::invalid_argument("trade-off curve beta outside [0, 1]");
      }
      if (i == 0) continue;
      if (!(p.alpha > points_[i - 1].alpha)) {
        throw std::invalid_argument("trade-off curve alphas must strictly increase");
      }
      if (p.beta > points_[i - 1].beta + tolerance) {
        throw std::invalid_argument("trade-off curve beta must be non-increasing");
      }
      if (i + 1 < points_.size()) {
        const auto& a = points_[i - 1];
        const auto& b = points_[i + 1];
        const double chord = a.beta + (p.alpha - a.alpha) / (b.alpha - a.alpha) * (b.beta - a.beta);
        if (p.beta > chord + tolerance) {
          throw std::invalid_argument("trade-off curve must be convex");
        }
      }
    }
  }

  std::vector<CurvePoint> points_;
};

// beta = G_mu(alpha) = Phi(Phi^-1(1 - alpha) - mu), for any signed mu.
inline double gmu_beta(GaussianInfluence influence, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("gmu_beta: alpha must lie in (0, 1)");
  }
  // Phi^-1(1 - alpha) == -Phi^-1(alpha) without rounding 1 - alpha.
  return normal_cdf(-normal_quantile(alpha) - influence.mu);
}

// Grid used to sample smooth curves: uniform steps plus log-spaced points
// towards both ends, where G_mu is steep.
inline std::vector<double> curve_sampling_grid(std::size_t uniform_points = 1001) {
  if (uniform_points < 2) throw std::invalid_argument("grid needs >= 2 points");
  std::vector<double> grid;
  for (std::size_t i = 0; i < uniform_points; ++i) {
    grid.push_back(static_cast<double>(i) / static_cast<double>(uniform_points - 1));
  }
  for (int e = 3 * 4; e <= 8 * 4; ++e) {
    const double a = std::pow(10.0, -e / 4.0);
    grid.push_back(a);
    grid.push_back(1.0 - a);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

// Sampled G_mu curve. Only mu >= 0 yields a convex trade-off curve; negative
// mu is still accepted by gmu_beta but has no TradeoffCurve representation.
inline TradeoffCurve gmu_curve(GaussianInfluence influence, std::size_t uniform_points = 1001) {
  if (!(influence.mu >= 0.0) || !std::isfinite(influence.mu)) {
    throw std::domain_error("gmu_curve: mu must be finite and >= 0");
  }
  std::vector<CurvePoint> pts;
  for (double a : curve_sampling_grid(uniform_points)) {
    if (a == 0.0) {
      pts.push_back({0.0, 1.0});
    } else if (a == 1.0) {
      pts.push_back({1.0, 0.0});
    } else {
      pts.push_back({a, gmu_beta(influence, a)});
    }
  }
  return TradeoffCurve::convexify(std::move(pts));
}

// G_mu1 (x) ... (x) G_muk = G_mu with mu = sqrt(sum mu_i^2).
inline GaussianInfluence compose_gaussian(std::span<const double> mus) {
  double scale = 0.0;
  for (double m : mus) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw std::domain_error("compose_gaussian: every mu must be finite and >= 0");
    }
    scale = std::max(scale, m);
  }
  if (scale == 0.0) return {0.0};
  double sum = 0.0;
  for (double m : mus) sum += (m / scale) * (m / scale);
  return {scale * std::sqrt(sum)};
}

inline GaussianInfluence compose_gaussian(std::initializer_list<double> mus) {
  return compose_gaussian(std::span<const double>(mus.begin(), mus.size()));
}

// Pointwise maximum. Crossing points between breakpoints are inserted so the
// piecewise-linear result is exact.
inline TradeoffCurve curve_max(const TradeoffCurve& f, const TradeoffCurve& g) {
  std::vector<double> alphas;
  for (const auto& p : f.points()) alphas.push_back(p.alpha);
  for (const auto& p : g.points()) alphas.push_back(p.alpha);
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());

  std::vector<CurvePoint> out;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double a = alphas[i];
    out.push_back({a, std::max(f(a), g(a))});
    if (i + 1 == alphas.size()) break;
    const double b = alphas[i + 1];
    const double da = f(a) - g(a);
    const double db = f(b) - g(b);
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      const double c = a + (b - a) * da / (da - db);
      if (c > a && c < b) out.push_back({c, std::max(f(c), g(c))});
    }
  }
  return TradeoffCurve(std::move(out));
}

// f^-1(beta) = inf{alpha : f(alpha) <= beta}. Reflecting the epigraph across
// the diagonal swaps the roles of the two hypotheses.
inline TradeoffCurve curve_inverse(const TradeoffCurve& f) {
  std::vector<CurvePoint> reflected;
  for (const auto& p : f.points()) reflected.push_back({p.beta, p.alpha});
  // f^-1 is 0 wherever beta >= f(0).
  reflected.push_back({1.0, 0.0});
  // If f(1) > 0, f^-1 is 1 on [0, f(1)].
  reflected.push_back({0.0, 1.0});
  return TradeoffCurve(internal::lower_hull(internal::sort_and_merge(std::move(reflected))));
}

// f^S = max{f, f^-1}.
inline TradeoffCurve symmetrize(const TradeoffCurve& f) {
  return curve_max(f, curve_inverse(f));
}

// Empirical errors of the test that rejects H0 when a statistic is >= tau:
// alpha = fraction of samples_p >= tau, beta = fraction of samples_q < tau.
// Both sample vectors must be sorted ascending.
inline CurvePoint empirical_errors(std::span<const double> sorted_p,
                                   std::span<const double> sorted_q, double tau) {
  const auto p_below = std::lower_bound(sorted_p.begin(), sorted_p.end(), tau) - sorted_p.begin();
  const auto q_below = std::lower_bound(sorted_q.begin(), sorted_q.end(), tau) - sorted_q.begin();
  const double np = static_cast<double>(sorted_p.size());
  const double nq = static_cast<double>(sorted_q.size());
  return {static_cast<double>(static_cast<std::ptrdiff_t>(sorted_p.size()) - p_below) / np,
          static_cast<double>(q_below) / nq};
}

// Thresholds used by every sweep in the library: one below all samples, the
// midpoints between consecutive distinct pooled values, and one above all.
inline std::vector<double> sweep_thresholds(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
  std::vector<double> taus;
  taus.reserve(pooled.size() + 1);
  taus.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i) {
    taus.push_back(pooled[i] + 0.5 * (pooled[i + 1] - pooled[i]));
  }
  taus.push_back(std::numeric_limits<double>::infinity());
  return taus;
}

// Finite-sample trade-off curve between the distributions of samples_p (H0)
// and samples_q (H1): threshold sweep followed by the lower convex envelope,
// which also covers randomized tests.
inline TradeoffCurve empirical_tradeoff(std::span<const double> samples_p,
                                        std::span<const double> samples_q) {
  if (samples_p.empty() || samples_q.empty()) {
    throw std::invalid_argument("empirical_tradeoff: sample lists must be non-empty");
  }
  std::vector<double> p(samples_p.begin(), samples_p.end());
  std::vector<double> q(samples_q.begin(), samples_q.end());
  for (double v : p) {
    if (std::isnan(v)) throw std::invalid_argument("empirical_tradeoff: NaN sample");
  }
  for (double v : q) {
    if (std::isnan(v)) throw std::invalid_argument("empirical_tradeoff: NaN sample");
  }
  std::sort(p.begin(), p.end());
  std::sort(q.begin(), q.end());
  std::vector<CurvePoint> scatter;
  for (double tau : sweep_thresholds(p, q)) scatter.push_back(empirical_errors(p, q, tau));
  return TradeoffCurve::convexify(std::move(scatter));
}

// max |f(a) - g(a)| over `grid_points` evenly spaced alphas in [0, 1]. With
// interior_only the endpoints 0 and 1 are skipped: a curve estimated from n
// samples cannot resolve alpha < 1/n, where G_mu for large mu is steepest.
inline double sup_distance(const TradeoffCurve& f, const TradeoffCurve& g,
                           std::size_t grid_points = 1001, bool interior_only = false) {
  if (grid_points < 2) throw std::invalid_argument("sup_distance: need >= 2 grid points");
  double worst = 0.0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    if (interior_only && (i == 0 || i + 1 == grid_points)) continue;
    const double a = static_cast<double>(i) / static_cast<double>(grid_points - 1);
    worst = std::max(worst, std::fabs(f(a) - g(a)));
  }
  return worst;
}

// The G_mu (mu >= 0) closest to f in sup_distance. Coarse scan then
// golden-section refinement.
inline GaussianInfluence best_fit_gmu(const TradeoffCurve& f, double mu_max = 10.0) {
  // Same grid as sup_distance, with G_mu evaluated exactly rather than through
  // a sampled curve, whose chord error would bias the fit.
  auto distance = [&](double mu) {
    const std::size_t n = 1001;
    double worst = std::max(std::fabs(f(0.0) - 1.0), std::fabs(f(1.0)));
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double a = static_cast<double>(i) / static_cast<double>(n - 1);
      worst = std::max(worst, std::fabs(f(a) - gmu_beta({mu}, a)));
    }
    return worst;
  };
  double best = 0.0;
  double best_d = distance(0.0);
  const int steps = 100;
  for (int i = 1; i <= steps; ++i) {
    const double mu = mu_max * i / steps;
    const double d = distance(mu);
    if (d < best_d) {
      best_d = d;
      best = mu;
    }
  }
  double lo = std::max(0.0, best - mu_max / steps);
  double hi = best + mu_max / steps;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 40; ++it) {
    const double m1 = hi - inv_phi * (hi - lo);
    const double m2 = lo + inv_phi * (hi - lo);
    if (distance(m1) < distance(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return {0.5 * (lo + hi)};
}

inline std::string format_curve_csv(const TradeoffCurve& curve) {
  std::string out = "alpha,beta\n";
  for (const auto& p : curve.points()) {
    out += format_number(p.alpha) + ',' + format_number(p.beta) + '\n';
  }
  return out;
}

inline TradeoffCurve parse_curve_csv(std::istream& in) {
  const NumericTable table = read_numeric_csv(in, {"alpha", "beta"});
  std::vector<CurvePoint> pts;
  pts.reserve(table.rows.size());
  for (const auto& row : table.rows) pts.push_back({row[0], row[1]});
  // Nine significant digits leave rounding noise well above 1e-12.
  return TradeoffCurve(std::move(pts), 1e-8);
}

}  // namespace finfl

#endif  // FINFL_TRADEOFF_HPP_

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "nlsobs/errors.hpp"
#include "nlsobs/spectral.hpp"

namespace nlsobs {

namespace {

using Span = std::pair<double, double>;
using Spans = std::vector<Span>;

// Closed sub-intervals of [0, horizon] on which p + t d (mod L) lies in [c, c + len].
Spans axis_times(double p, double d, double c, double len, double L, double horizon) {
  if (len >= L) return {{0.0, horizon}};
  if (d == 0.0) {
    double y = std::fmod(p - c, L);
    if (y < 0.0) y += L;
    return y <= len ? Spans{{0.0, horizon}} : Spans{};
  }
  const double q0 = p, q1 = p + d * horizon;
  const double qmin = std::min(q0, q1), qmax = std::max(q0, q1);
  const long jlo = static_cast<long>(std::floor((qmin - c - len) / L)) - 1;
  const long jhi = static_cast<long>(std::ceil((qmax - c) / L)) + 1;
  Spans out;
  for (long j = jlo; j <= jhi; ++j) {
    const double a = c + static_cast<double>(j) * L, b = a + len;
    double t0 = (a - p) / d, t1 = (b - p) / d;
    if (t0 > t1) std::swap(t0, t1);
    if (t1 < 0.0 || t0 > horizon) continue;
    out.emplace_back(std::max(t0, 0.0), std::min(t1, horizon));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Spans intersect(const Spans& a, const Spans& b) {
  Spans out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].first, b[j].first);
    const double hi = std::min(a[i].second, b[j].second);
    if (lo <= hi) out.emplace_back(lo, hi);
    if (a[i].second < b[j].second)
      ++i;
    else
      ++j;
  }
  return out;
}

// Earliest time in (0, T0) at which the ray sits in the plateau set; +inf if none.
double entry_time(const ObservationWindow& w, const Ray& ray, double T0) {
  const auto& g = *w.geometry();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& box : w.boxes()) {
    Spans spans{{0.0, T0}};
    for (int a = 0; a < g.dim() && !spans.empty(); ++a) {
      const auto& s = box.support[a];
      const auto& p = box.plateau[a];
      if (s.full || p.full) continue;
      spans = intersect(spans, axis_times(ray.origin[a], ray.direction[a], p.lo, p.hi - p.lo,
                                          g.length(a), T0));
    }
    for (const auto& sp : spans) {
      if (sp.second > 0.0 && sp.first < T0) {
        best = std::min(best, sp.first);
        break;
      }
    }
  }
  return best;
}

}  // namespace

GccReport gcc_ray_check(const ObservationWindow& w, double T0, const GccSampling& sampling) {
  if (!(T0 > 0.0)) throw PreconditionError("gcc_ray_check: T0 must be positive");
  const auto& g = *w.geometry();
  GccReport report;
  report.horizon = T0;

  std::vector<std::array<double, 2>> dirs;
  if (g.dim() == 1) {
    dirs = {{1.0, 0.0}, {-1.0, 0.0}};
  } else {
    std::size_t D = std::max<std::size_t>(sampling.directions, 4);
    D = (D + 3) / 4 * 4;
    for (std::size_t k = 0; k < D; ++k) {
      // Axis-aligned directions are exact so constant-coordinate rays are tested as such.
      static constexpr std::array<std::array<double, 2>, 4> axis{
          {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}}};
      if (k % (D / 4) == 0) {
        dirs.push_back(axis[k / (D / 4)]);
      } else {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(D);
        dirs.push_back({std::cos(th), std::sin(th)});
      }
    }
  }

  std::mt19937_64 rng(sampling.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::array<double, 2>> origins(sampling.positions);
  for (auto& o : origins)
    for (int a = 0; a < 2; ++a) o[a] = a < g.dim() ? unit(rng) * g.length(a) : 0.0;

  // Among rays that never enter, report an axis-aligned one when there is one.
  auto skew = [](const std::array<double, 2>& d) { return std::min(std::abs(d[0]), std::abs(d[1])); };
  double worst = -1.0;
  for (const auto& o : origins) {
    for (const auto& d : dirs) {
      const Ray ray{o, d};
      const double t = w.empty() ? std::numeric_limits<double>::infinity() : entry_time(w, ray, T0);
      ++report.rays_tested;
      if (!std::isfinite(t)) ++report.rays_failed;
      if (t > worst || (t == worst && skew(d) < skew(report.worst_ray.direction))) {
        worst = t;
        report.worst_ray = ray;
        report.worst_entry_time = t;
      }
    }
  }
  report.passed = report.rays_tested > 0 && report.rays_failed == 0;
  return report;
}

}  // namespace nlsobs

#pragma once

#include <random>

#include "nlsobs/experiment.hpp"

namespace nlsobs::test {

inline std::mt19937_64& rng() {
  static std::mt19937_64 r(20240611ULL);
  return r;
}

inline double uniform(double a = -1.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(rng()); }

// Random field with |u_k| ~ decay^{|k|}, Nyquist-adjacent modes left empty.
inline SpectralField random_field(const GeometryPtr& g, double decay = 0.6, double scale = 1.0) {
  CVector c = CVector::Zero(g->total());
  for (int f = 0; f < g->total(); ++f) {
    const auto k = g->wavenumber(f);
    bool inside = true;
    for (int a = 0; a < g->dim(); ++a) inside = inside && std::abs(k[a]) < g->size(a) / 2 - 1;
    if (inside) c[f] = scale * std::pow(decay, std::hypot(double(k[0]), double(k[1]))) * cplx(uniform(), uniform());
  }
  return SpectralField(g, c);
}

inline SpectralField random_high(const GeometryPtr& g, int n, double decay = 0.6, double scale = 1.0) {
  return project_high(random_field(g, decay, scale), FrequencySplit(n));
}

// Interval [1, 2] with plateau [1.25, 1.75].
inline ObservationWindow reference_window(const GeometryPtr& g) { return ObservationWindow::slab(g, 1.0, 2.0); }

inline double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const CVector& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace nlsobs::test

#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace nlsobs::detail {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

int next_pow2(int x) {
  int p = 1;
  while (p < x) p *= 2;
  return p;
}

}  // namespace

Fft::Fft(int dim, std::array<int, 2> sizes) : total_(sizes[0] * (dim == 2 ? sizes[1] : 1)) {
  std::vector<cplx> scratch(static_cast<std::size_t>(total_));
  auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  if (dim == 1) {
    forward_plan_ = fftw_plan_dft_1d(sizes[0], p, p, FFTW_FORWARD, flags);
    backward_plan_ = fftw_plan_dft_1d(sizes[0], p, p, FFTW_BACKWARD, flags);
  } else {
    forward_plan_ = fftw_plan_dft_2d(sizes[0], sizes[1], p, p, FFTW_FORWARD, flags);
    backward_plan_ = fftw_plan_dft_2d(sizes[0], sizes[1], p, p, FFTW_BACKWARD, flags);
  }
}

const Fft& Fft::get(int dim, std::array<int, 2> sizes) {
  if (dim == 1) sizes[1] = 1;
  std::lock_guard<std::mutex> lock(plan_mutex());
  // Plans live for the whole process; fftw_execute_dft is thread-safe.
  static std::map<std::array<int, 3>, std::unique_ptr<Fft>> cache;
  auto key = std::array<int, 3>{dim, sizes[0], sizes[1]};
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::unique_ptr<Fft>(new Fft(dim, sizes))).first;
  return *it->second;
}

void Fft::forward(cplx* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), p, p);
}

void Fft::backward(cplx* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(backward_plan_), p, p);
}

void coeffs_to_grid(const TorusGeometry& g, const cplx* coeffs, cplx* samples) {
  const int n = g.total();
  std::copy(coeffs, coeffs + n, samples);
  Fft::get(g.dim(), {g.size(0), g.size(1)}).backward(samples);
  const double scale = 1.0 / std::sqrt(g.volume());
  for (int j = 0; j < n; ++j) samples[j] *= scale;
}

void grid_to_coeffs(const TorusGeometry& g, cplx* samples, cplx* coeffs) {
  const int n = g.total();
  Fft::get(g.dim(), {g.size(0), g.size(1)}).forward(samples);
  const double scale = std::sqrt(g.volume()) / n;
  for (int j = 0; j < n; ++j) coeffs[j] = samples[j] * scale;
}

PaddedGrid::PaddedGrid(GeometryPtr geometry, std::array<int, 2> padded_sizes)
    : geometry_(std::move(geometry)), sizes_(padded_sizes) {
  const auto& g = *geometry_;
  if (g.dim() == 1) sizes_[1] = 1;
  total_ = sizes_[0] * sizes_[1];
  fft_ = &Fft::get(g.dim(), sizes_);
  slot_.resize(static_cast<std::size_t>(g.total()));
  for (int f = 0; f < g.total(); ++f) {
    auto k = g.wavenumber(f);
    int i0 = k[0] < 0 ? k[0] + sizes_[0] : k[0];
    int i1 = g.dim() == 2 ? (k[1] < 0 ? k[1] + sizes_[1] : k[1]) : 0;
    slot_[f] = i0 * sizes_[1] + i1;
  }
}

PaddedGrid PaddedGrid::for_degree(GeometryPtr geometry, int factors) {
  std::array<int, 2> m{1, 1};
  for (int a = 0; a < geometry->dim(); ++a) {
    const int n = geometry->size(a);
    // A product of p fields with |k| <= N/2 aliases onto retained modes
    // only if M < (p + 1) N / 2.
    const int need = std::max(n, ((std::max(factors, 1) + 1) * n + 1) / 2);
    m[a] = next_pow2(need);
  }
  return PaddedGrid(std::move(geometry), m);
}

void PaddedGrid::to_grid(const cplx* coeffs, cplx* samples) const {
  std::fill(samples, samples + total_, cplx(0.0));
  const int n = geometry_->total();
  for (int f = 0; f < n; ++f) samples[slot_[f]] = coeffs[f];
  fft_->backward(samples);
  const double scale = 1.0 / std::sqrt(geometry_->volume());
  for (int j = 0; j < total_; ++j) samples[j] *= scale;
}

void PaddedGrid::to_coeffs(cplx* samples, cplx* coeffs) const {
  fft_->forward(samples);
  const double scale = std::sqrt(geometry_->volume()) / total_;
  const int n = geometry_->total();
  for (int f = 0; f < n; ++f) coeffs[f] = samples[slot_[f]] * scale;
}

}  // namespace nlsobs::detail

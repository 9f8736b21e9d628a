#pragma once

#include <array>
#include <vector>

#include "nlsobs/spectral.hpp"

namespace nlsobs::detail {

// Unnormalized in-place complex DFT on a 1-D or 2-D row-major grid.
class Fft {
 public:
  static const Fft& get(int dim, std::array<int, 2> sizes);
  void forward(cplx* data) const;   // sum_j u_j e^{-2 pi i jk/N}
  void backward(cplx* data) const;  // sum_k c_k e^{+2 pi i jk/N}
  int total() const { return total_; }

 private:
  Fft(int dim, std::array<int, 2> sizes);
  void* forward_plan_;
  void* backward_plan_;
  int total_;
};

// Coefficients <-> physical samples on the native grid.
void coeffs_to_grid(const TorusGeometry& g, const cplx* coeffs, cplx* samples);
void grid_to_coeffs(const TorusGeometry& g, cplx* samples, cplx* coeffs);

// Zero-padded grid of size M_i >= N_i used to evaluate polynomial products
// without aliasing.
class PaddedGrid {
 public:
  PaddedGrid(GeometryPtr geometry, std::array<int, 2> padded_sizes);
  // Smallest power-of-two padding exact for products of `factors` band-limited fields.
  static PaddedGrid for_degree(GeometryPtr geometry, int factors);

  int total() const { return total_; }
  const GeometryPtr& geometry() const { return geometry_; }
  double volume() const { return geometry_->volume(); }
  void to_grid(const cplx* coeffs, cplx* samples) const;
  // Destroys `samples`.
  void to_coeffs(cplx* samples, cplx* coeffs) const;

 private:
  GeometryPtr geometry_;
  const Fft* fft_;
  std::array<int, 2> sizes_;
  int total_;
  std::vector<int> slot_;  // padded flat index of each retained coefficient
};

}  // namespace nlsobs::detail

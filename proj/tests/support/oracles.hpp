#pragma once

#include <functional>

#include "ctm/linalg.hpp"
#include "ctm/tensor.hpp"

namespace ctm::testsupport {

// 4th order central stencil (-E(2h) + 8E(h) - 8E(-h) + E(-2h)) / (12h)
inline double fd4(const std::function<double(double)>& e, double h) {
  return (-e(2 * h) + 8 * e(h) - 8 * e(-h) + e(-2 * h)) / (12 * h);
}

/// Directional derivative of a scalar function of a matrix argument along a
/// fixed direction, by the 4th-order stencil.
inline double fd_directional(const std::function<double(const DenseTensor&)>& e,
                             const DenseTensor& x0, const DenseTensor& dir, double h) {
  return fd4([&](double t) { return e(x0 + dir * cdouble(t, 0.0)); }, h);
}

/// Hermitian basis direction for entry (i, j): i == j gives e_ii, i < j gives
/// (e_ij + e_ji) for part 0 and (i e_ij - i e_ji) for part 1.
inline DenseTensor herm_dir(long n, long i, long j, int part) {
  DenseTensor h(std::vector<long>{n, n});
  if (i == j) {
    h[i * n + i] = 1.0;
  } else if (part == 0) {
    h[i * n + j] = 1.0;
    h[j * n + i] = 1.0;
  } else {
    h[i * n + j] = cdouble(0.0, 1.0);
    h[j * n + i] = cdouble(0.0, -1.0);
  }
  return h;
}

inline DenseTensor make_spectrum_matrix(const std::vector<double>& spec, const DenseTensor& q) {
  const long n = q.dim(0);
  DenseTensor d(std::vector<long>{n, n});
  for (long i = 0; i < n; ++i) d[i * n + i] = spec[static_cast<size_t>(i)];
  return matmul(matmul(q, d), dagger(q));
}

}  // namespace ctm::testsupport

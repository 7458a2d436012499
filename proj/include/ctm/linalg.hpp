#pragma once

#include <functional>

#include "ctm/tensor.hpp"

namespace ctm {

/// M = U diag(s) U^dagger with s sorted by descending |s|, ties broken by
/// descending signed value, then by original (ascending-eigenvalue) index.
struct HermitianEig {
  std::vector<double> values;
  DenseTensor vectors;  // columns are eigenvectors
};
HermitianEig hermitian_eig(const DenseTensor& m);

/// A = U diag(s) V^dagger, economy size, s nonnegative descending.
struct Svd {
  DenseTensor u;
  std::vector<double> s;
  DenseTensor v;
};
Svd svd(const DenseTensor& a);

/// A = Q R with diag(R) real and strictly positive.
struct Qr {
  DenseTensor q;
  DenseTensor r;
};
Qr qr_positive(const DenseTensor& a);

/// Right eigenpairs of a general complex square matrix (unsorted).
struct GeneralEig {
  std::vector<cdouble> values;
  DenseTensor vectors;  // columns
};
GeneralEig eig_general(const DenseTensor& m);

/// Solves a x = b (a square, b matrix or vector shaped (n, k) or (n)).
DenseTensor solve_dense(const DenseTensor& a, const DenseTensor& b);

/// Columns of V spanning the right null space: singular values
/// <= rel_tol * s_max (always at least the exact rank deficiency).
DenseTensor null_space(const DenseTensor& a, double rel_tol);

/// Solves the real symmetric positive definite system a x = b.
std::vector<double> solve_real_spd(std::vector<double> a, std::vector<double> b, long n);

struct LinearMap {
  long dim_in = 0;
  long dim_out = 0;
  std::function<void(const cdouble*, cdouble*)> apply;
  std::vector<cdouble> operator()(const std::vector<cdouble>& x) const {
    std::vector<cdouble> y(static_cast<size_t>(dim_out));
    apply(x.data(), y.data());
    return y;
  }
};
LinearMap dense_map(const DenseTensor& m);

struct SylvesterResult {
  DenseTensor gamma;
  double residual = 0.0;  // recomputed ||gamma C - applyM(gamma) - rhs||_F / ||rhs||_F
  long iterations = 0;
};

/// Solves gamma C - applyM(gamma) = rhs for gamma (p x q), C (q x q), with a
/// stabilized biconjugate-gradient iteration. applyM acts on the vectorized
/// p x q matrix. precond, when given, is a right preconditioner applied as
/// gamma = z * precond (the callers pass C^{-1}).
SylvesterResult solve_sylvester(const LinearMap& applyM, const DenseTensor& c,
                                const DenseTensor& rhs, const DenseTensor* precond, double tol,
                                long maxiter);

}  // namespace ctm

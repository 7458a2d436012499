#include "ctm/linalg.hpp"

#include <complex>
#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <algorithm>
#include <numeric>

namespace ctm {

namespace {

void require_square(const DenseTensor& m, const char* who) {
  if (m.rank() != 2 || m.dim(0) != m.dim(1))
    throw ShapeError(std::string(who) + " expects a square matrix");
}

double max_abs_offherm(const DenseTensor& m) {
  long n = m.dim(0);
  double r = 0.0;
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      r = std::max(r, std::abs(m[i * n + j] - std::conj(m[j * n + i])));
  return r;
}

}  // namespace

HermitianEig hermitian_eig(const DenseTensor& m) {
  require_square(m, "hermitian_eig");
  const long n = m.dim(0);
  const double scale = m.max_abs();
  if (scale > 0 && max_abs_offherm(m) > 1e-10 * scale)
    throw NumericError("hermitian_eig: input is not Hermitian to 1e-10 relative");

  DenseTensor a(std::vector<long>{n, n});
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) a[i * n + j] = 0.5 * (m[i * n + j] + std::conj(m[j * n + i]));

  std::vector<double> w(static_cast<size_t>(n));
  lapack_int info = LAPACKE_zheevd(LAPACK_ROW_MAJOR, 'V', 'U', static_cast<lapack_int>(n),
                                   a.data(), static_cast<lapack_int>(n), w.data());
  if (info != 0) throw NumericError("hermitian_eig: zheevd failed, info " + std::to_string(info));

  // zheevd returns ascending eigenvalues; re-sort by |s| descending
  std::vector<long> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](long x, long y) {
    double ax = std::abs(w[static_cast<size_t>(x)]), ay = std::abs(w[static_cast<size_t>(y)]);
    if (ax != ay) return ax > ay;
    if (w[static_cast<size_t>(x)] != w[static_cast<size_t>(y)])
      return w[static_cast<size_t>(x)] > w[static_cast<size_t>(y)];
    return x < y;
  });

  HermitianEig out;
  out.values.resize(static_cast<size_t>(n));
  out.vectors = DenseTensor(std::vector<long>{n, n});
  for (long k = 0; k < n; ++k) {
    long src = idx[static_cast<size_t>(k)];
    out.values[static_cast<size_t>(k)] = w[static_cast<size_t>(src)];
    for (long i = 0; i < n; ++i) out.vectors[i * n + k] = a[i * n + src];
  }
  return out;
}

Svd svd(const DenseTensor& a_in) {
  if (a_in.rank() != 2) throw ShapeError("svd expects a matrix");
  if (!a_in.all_finite()) throw NumericError("svd: input has non-finite entries");
  const long m = a_in.dim(0), n = a_in.dim(1), k = std::min(m, n);
  DenseTensor a = a_in;
  Svd out;
  out.u = DenseTensor(std::vector<long>{m, k});
  out.s.resize(static_cast<size_t>(k));
  DenseTensor vt(std::vector<long>{k, n});
  lapack_int info = LAPACKE_zgesdd(LAPACK_ROW_MAJOR, 'S', static_cast<lapack_int>(m),
                                   static_cast<lapack_int>(n), a.data(), static_cast<lapack_int>(n),
                                   out.s.data(), out.u.data(), static_cast<lapack_int>(k),
                                   vt.data(), static_cast<lapack_int>(n));
  if (info != 0) throw NumericError("svd: zgesdd failed, info " + std::to_string(info));
  out.v = dagger(vt);
  return out;
}

Qr qr_positive(const DenseTensor& a_in) {
  if (a_in.rank() != 2) throw ShapeError("qr_positive expects a matrix");
  const long m = a_in.dim(0), n = a_in.dim(1), k = std::min(m, n);
  DenseTensor a = a_in;
  std::vector<cdouble> tau(static_cast<size_t>(k));
  lapack_int info =
      LAPACKE_zgeqrf(LAPACK_ROW_MAJOR, static_cast<lapack_int>(m), static_cast<lapack_int>(n),
                     a.data(), static_cast<lapack_int>(n), tau.data());
  if (info != 0) throw NumericError("qr_positive: zgeqrf failed, info " + std::to_string(info));

  DenseTensor r(std::vector<long>{k, n});
  for (long i = 0; i < k; ++i)
    for (long j = i; j < n; ++j) r[i * n + j] = a[i * n + j];

  double rmax = r.max_abs();
  for (long i = 0; i < k; ++i)
    if (std::abs(r[i * n + i]) <= 1e-12 * std::max(rmax, 1e-300))
      throw NumericError(
          "qr_positive: input is rank deficient; fall back to the transfer-matrix scheme");

  DenseTensor q = a;  // m x n holds reflectors, expand first k columns
  info = LAPACKE_zungqr(LAPACK_ROW_MAJOR, static_cast<lapack_int>(m), static_cast<lapack_int>(k),
                        static_cast<lapack_int>(k), q.data(), static_cast<lapack_int>(n),
                        tau.data());
  if (info != 0) throw NumericError("qr_positive: zungqr failed, info " + std::to_string(info));
  DenseTensor qk(std::vector<long>{m, k});
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < k; ++j) qk[i * k + j] = q[i * n + j];

  // absorb diagonal phases so diag(R) is real positive
  for (long i = 0; i < k; ++i) {
    cdouble d = r[i * n + i];
    cdouble ph = d / std::abs(d);
    for (long j = i; j < n; ++j) r[i * n + j] *= std::conj(ph);
    for (long row = 0; row < m; ++row) qk[row * k + i] *= ph;
    r[i * n + i] = cdouble(std::abs(d), 0.0);
  }
  return Qr{std::move(qk), std::move(r)};
}

GeneralEig eig_general(const DenseTensor& m_in) {
  require_square(m_in, "eig_general");
  const long n = m_in.dim(0);
  DenseTensor a = m_in;
  GeneralEig out;
  out.values.resize(static_cast<size_t>(n));
  out.vectors = DenseTensor(std::vector<long>{n, n});
  lapack_int info = LAPACKE_zgeev(LAPACK_ROW_MAJOR, 'N', 'V', static_cast<lapack_int>(n), a.data(),
                                  static_cast<lapack_int>(n), out.values.data(), nullptr, 1,
                                  out.vectors.data(), static_cast<lapack_int>(n));
  if (info != 0) throw NumericError("eig_general: zgeev failed, info " + std::to_string(info));
  return out;
}

DenseTensor solve_dense(const DenseTensor& a_in, const DenseTensor& b_in) {
  require_square(a_in, "solve_dense");
  const long n = a_in.dim(0);
  DenseTensor a = a_in;
  DenseTensor b = b_in.rank() == 1 ? b_in.reshaped({b_in.dim(0), 1}) : b_in;
  if (b.dim(0) != n) throw ShapeError("solve_dense: rhs rows mismatch");
  const long nrhs = b.dim(1);
  std::vector<lapack_int> ipiv(static_cast<size_t>(n));
  lapack_int info = LAPACKE_zgesv(LAPACK_ROW_MAJOR, static_cast<lapack_int>(n),
                                  static_cast<lapack_int>(nrhs), a.data(),
                                  static_cast<lapack_int>(n), ipiv.data(), b.data(),
                                  static_cast<lapack_int>(nrhs));
  if (info != 0) throw NumericError("solve_dense: zgesv failed, info " + std::to_string(info));
  return b_in.rank() == 1 ? b.reshaped({n}) : b;
}

DenseTensor null_space(const DenseTensor& a, double rel_tol) {
  if (a.rank() != 2) throw ShapeError("null_space expects a matrix");
  const long m = a.dim(0), n = a.dim(1);
  DenseTensor work = a;
  const long k = std::min(m, n);
  std::vector<double> s(static_cast<size_t>(k));
  DenseTensor u(std::vector<long>{m, m});
  DenseTensor vt(std::vector<long>{n, n});
  lapack_int info = LAPACKE_zgesdd(LAPACK_ROW_MAJOR, 'A', static_cast<lapack_int>(m),
                                   static_cast<lapack_int>(n), work.data(),
                                   static_cast<lapack_int>(n), s.data(), u.data(),
                                   static_cast<lapack_int>(m), vt.data(),
                                   static_cast<lapack_int>(n));
  if (info != 0) throw NumericError("null_space: zgesdd failed, info " + std::to_string(info));
  double smax = k > 0 ? s[0] : 0.0;
  long rank = 0;
  for (long i = 0; i < k; ++i)
    if (s[static_cast<size_t>(i)] > rel_tol * std::max(smax, 1e-300)) ++rank;
  const long nullity = n - rank;
  DenseTensor ns(std::vector<long>{n, std::max<long>(nullity, 1)});
  if (nullity == 0) return DenseTensor(std::vector<long>{n, 1}).reshaped({n, 1}) * cdouble(0.0);
  for (long j = 0; j < nullity; ++j)
    for (long i = 0; i < n; ++i) ns[i * nullity + j] = std::conj(vt[(rank + j) * n + i]);
  return ns.reshaped({n, nullity});
}

std::vector<double> solve_real_spd(std::vector<double> a, std::vector<double> b, long n) {
  lapack_int info = LAPACKE_dposv(LAPACK_ROW_MAJOR, 'U', static_cast<lapack_int>(n), 1, a.data(),
                                  static_cast<lapack_int>(n), b.data(), 1);
  if (info != 0) throw NumericError("solve_real_spd: dposv failed, info " + std::to_string(info));
  return b;
}

LinearMap dense_map(const DenseTensor& m) {
  if (m.rank() != 2) throw ShapeError("dense_map expects a matrix");
  LinearMap lm;
  lm.dim_in = m.dim(1);
  lm.dim_out = m.dim(0);
  DenseTensor copy = m;
  lm.apply = [copy](const cdouble* x, cdouble* y) {
    const long rows = copy.dim(0), cols = copy.dim(1);
    for (long i = 0; i < rows; ++i) {
      cdouble s = 0.0;
      const cdouble* row = copy.data() + i * cols;
      for (long j = 0; j < cols; ++j) s += row[j] * x[j];
      y[i] = s;
    }
  };
  return lm;
}

namespace {

cdouble vdot(const std::vector<cdouble>& a, const std::vector<cdouble>& b) {
  cdouble s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double vnorm(const std::vector<cdouble>& a) { return std::sqrt(std::abs(vdot(a, a))); }

}  // namespace

SylvesterResult solve_sylvester(const LinearMap& applyM, const DenseTensor& c,
                                const DenseTensor& rhs, const DenseTensor* precond, double tol,
                                long maxiter) {
  require_square(c, "solve_sylvester");
  if (rhs.rank() != 2 || rhs.dim(1) != c.dim(0))
    throw ShapeError("solve_sylvester: rhs columns must match C");
  const long p = rhs.dim(0), q = rhs.dim(1), nn = p * q;
  if (applyM.apply && (applyM.dim_in != nn || applyM.dim_out != nn))
    throw ShapeError("solve_sylvester: applyM dimension mismatch");
  if (precond) {
    if (precond->rank() != 2 || precond->dim(0) != q || precond->dim(1) != q)
      throw ShapeError("solve_sylvester: preconditioner must be q x q");
    if (!precond->all_finite())
      throw NumericError("solve_sylvester: singular C makes the preconditioner unusable");
  }
  if (maxiter <= 0) maxiter = 10 * nn;

  // z-space operator: gamma = z * P_r (if preconditioned), L(gamma) = gamma C - M gamma
  auto right_mul = [&](const std::vector<cdouble>& x, const DenseTensor& mat,
                       std::vector<cdouble>& out) {
    for (long i = 0; i < p; ++i)
      for (long j = 0; j < q; ++j) {
        cdouble s = 0.0;
        for (long l = 0; l < q; ++l) s += x[static_cast<size_t>(i * q + l)] * mat[l * q + j];
        out[static_cast<size_t>(i * q + j)] = s;
      }
  };
  std::vector<cdouble> tmp_gamma(static_cast<size_t>(nn)), tmp_m(static_cast<size_t>(nn));
  auto op = [&](const std::vector<cdouble>& z, std::vector<cdouble>& out) {
    const std::vector<cdouble>* g = &z;
    if (precond) {
      right_mul(z, *precond, tmp_gamma);
      g = &tmp_gamma;
    }
    right_mul(*g, c, out);
    if (applyM.apply) {
      applyM.apply(g->data(), tmp_m.data());
      for (long i = 0; i < nn; ++i) out[static_cast<size_t>(i)] -= tmp_m[static_cast<size_t>(i)];
    }
  };

  std::vector<cdouble> b(rhs.data(), rhs.data() + nn);
  const double bnorm = vnorm(b);
  SylvesterResult result;
  result.gamma = DenseTensor(std::vector<long>{p, q});
  if (bnorm == 0.0) return result;

  std::vector<cdouble> x(static_cast<size_t>(nn), 0.0), r = b, rhat = b,
                       v(static_cast<size_t>(nn), 0.0), pp(static_cast<size_t>(nn), 0.0),
                       s(static_cast<size_t>(nn)), t(static_cast<size_t>(nn)),
                       ax(static_cast<size_t>(nn));
  cdouble rho = 1.0, alpha = 1.0, omega = 1.0;
  long it = 0;
  bool converged = false;
  for (; it < maxiter; ++it) {
    cdouble rho_new = vdot(rhat, r);
    if (std::abs(rho_new) < 1e-300) {  // breakdown: restart from current residual
      op(x, ax);
      for (long i = 0; i < nn; ++i) r[static_cast<size_t>(i)] = b[static_cast<size_t>(i)] - ax[static_cast<size_t>(i)];
      rhat = r;
      rho = alpha = omega = 1.0;
      std::fill(v.begin(), v.end(), cdouble(0.0));
      std::fill(pp.begin(), pp.end(), cdouble(0.0));
      rho_new = vdot(rhat, r);
      if (std::abs(rho_new) < 1e-300) break;
    }
    cdouble beta = (rho_new / rho) * (alpha / omega);
    for (long i = 0; i < nn; ++i)
      pp[static_cast<size_t>(i)] = r[static_cast<size_t>(i)] + beta * (pp[static_cast<size_t>(i)] - omega * v[static_cast<size_t>(i)]);
    op(pp, v);
    cdouble denom = vdot(rhat, v);
    if (std::abs(denom) < 1e-300) break;
    alpha = rho_new / denom;
    for (long i = 0; i < nn; ++i) s[static_cast<size_t>(i)] = r[static_cast<size_t>(i)] - alpha * v[static_cast<size_t>(i)];
    if (vnorm(s) <= tol * bnorm) {
      for (long i = 0; i < nn; ++i) x[static_cast<size_t>(i)] += alpha * pp[static_cast<size_t>(i)];
      converged = true;
      break;
    }
    op(s, t);
    cdouble tt = vdot(t, t);
    if (std::abs(tt) < 1e-300) break;
    omega = vdot(t, s) / tt;
    for (long i = 0; i < nn; ++i)
      x[static_cast<size_t>(i)] += alpha * pp[static_cast<size_t>(i)] + omega * s[static_cast<size_t>(i)];
    for (long i = 0; i < nn; ++i) r[static_cast<size_t>(i)] = s[static_cast<size_t>(i)] - omega * t[static_cast<size_t>(i)];
    if (vnorm(r) <= tol * bnorm) {
      converged = true;
      ++it;
      break;
    }
    rho = rho_new;
  }

  // recover gamma and recompute the residual independently
  std::vector<cdouble> gamma = x;
  if (precond) {
    right_mul(x, *precond, tmp_gamma);
    gamma = tmp_gamma;
  }
  for (long i = 0; i < nn; ++i) result.gamma[i] = gamma[static_cast<size_t>(i)];

  std::vector<cdouble> check(static_cast<size_t>(nn));
  right_mul(gamma, c, check);
  if (applyM.apply) {
    applyM.apply(gamma.data(), tmp_m.data());
    for (long i = 0; i < nn; ++i) check[static_cast<size_t>(i)] -= tmp_m[static_cast<size_t>(i)];
  }
  double rnorm = 0.0;
  for (long i = 0; i < nn; ++i) rnorm += std::norm(check[static_cast<size_t>(i)] - b[static_cast<size_t>(i)]);
  result.residual = std::sqrt(rnorm) / bnorm;
  result.iterations = it;
  if (!converged && result.residual > tol)
    throw ConvergenceError("solve_sylvester: BiCGSTAB did not reach tolerance " +
                               std::to_string(tol) + " in " + std::to_string(maxiter) +
                               " iterations",
                           result.residual);
  return result;
}

}  // namespace ctm

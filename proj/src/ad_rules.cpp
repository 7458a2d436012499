#include "ctm/ad_rules.hpp"

namespace ctm {

GradMode GradMode::parse(const std::string& name, double epsilon) {
  if (name == "exact") return exact();
  if (name == "lorentzian") return lorentzian(epsilon, false);
  if (name == "lorentzian_full_dp") return lorentzian(epsilon, true);
  if (name == "dp_zero") return dp_zero();
  throw ConfigError("unknown gradient mode '" + name + "'");
}

DenseTensor broadened_f(const std::vector<double>& s, double epsilon, GradMode::Broadening form) {
  if (epsilon < 0) throw std::invalid_argument("broadened_f: epsilon must be >= 0");
  const long n = static_cast<long>(s.size());
  DenseTensor f(std::vector<long>{n, n});
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      if (i == j) continue;
      double x = s[static_cast<size_t>(j)] - s[static_cast<size_t>(i)];
      if (epsilon == 0.0) {
        f[i * n + j] = 1.0 / x;  // Inf at exact degeneracy, reported as-is
      } else {
        double denom =
            form == GradMode::Broadening::paper_printed ? x * x - epsilon : x * x + epsilon;
        f[i * n + j] = x / denom;
      }
    }
  return f;
}

namespace {

DenseTensor herm_sym(const DenseTensor& m) { return (m + dagger(m)) * cdouble(0.5, 0.0); }

DenseTensor diag_part(const DenseTensor& m) {
  const long n = m.dim(0);
  DenseTensor d(std::vector<long>{n, n});
  for (long i = 0; i < n; ++i) d[i * n + i] = m[i * n + i];
  return d;
}

DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b) {
  DenseTensor out = a;
  for (long i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

DenseTensor right_scale(const DenseTensor& m, const std::vector<double>& d) {
  DenseTensor out = m;
  const long rows = m.dim(0), cols = m.dim(1);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) out[i * cols + j] *= d[static_cast<size_t>(j)];
  return out;
}

void check_lorentzian(const GradMode& mode) {
  if (mode.kind == GradMode::Kind::lorentzian && mode.epsilon <= 0)
    throw std::invalid_argument("lorentzian mode requires epsilon > 0");
}

}  // namespace

DenseTensor eig_trunc_vjp(const DenseTensor& g_c, const DenseTensor& g_p, const LinearMap& apply_m,
                          const DenseTensor& p, const std::vector<double>& c_diag,
                          const GradMode& mode, double tol, long maxiter) {
  check_lorentzian(mode);
  const long n = p.dim(0), chi = p.dim(1);
  if (g_p.shape() != p.shape()) throw ShapeError("eig_trunc_vjp: G_P shape mismatch");
  if (g_c.rank() != 2 || g_c.dim(0) != chi || g_c.dim(1) != chi)
    throw ShapeError("eig_trunc_vjp: G_C shape mismatch");

  auto project_perp = [&](const DenseTensor& x) {  // (1 - P P^dagger) x
    return x - matmul(p, matmul(dagger(p), x));
  };

  DenseTensor g_m(std::vector<long>{n, n});
  const DenseTensor pdag = dagger(p);

  if (mode.kind == GradMode::Kind::dp_zero) {
    g_m = matmul(p, matmul(diag_part(g_c), pdag));
    return herm_sym(g_m);
  }

  if (mode.kind == GradMode::Kind::exact) {
    // kept block: the full, non-diagonal G_C
    g_m = matmul(p, matmul(g_c, pdag));
  } else {
    // prior art keeps C diagonal; kept-sector rotations go through broadened F
    DenseTensor f = broadened_f(c_diag, mode.epsilon, mode.form);
    DenseTensor kept = diag_part(g_c) + hadamard(f, matmul(pdag, g_p));
    g_m = matmul(p, matmul(kept, pdag));
  }

  // discarded sector
  DenseTensor rhs = project_perp(g_p);
  if (rhs.max_abs() > 0) {
    DenseTensor gamma;
    if (mode.kind == GradMode::Kind::exact || mode.full_dp) {
      DenseTensor c(std::vector<long>{chi, chi});
      DenseTensor cinv(std::vector<long>{chi, chi});
      for (long i = 0; i < chi; ++i) {
        c[i * chi + i] = c_diag[static_cast<size_t>(i)];
        cinv[i * chi + i] = 1.0 / c_diag[static_cast<size_t>(i)];
      }
      if (apply_m.dim_in != n || apply_m.dim_out != n)
        throw ShapeError("eig_trunc_vjp: apply_m must act on length-n vectors");
      LinearMap m_perp;  // gamma -> M (1-PP+) gamma, columnwise through apply_m
      m_perp.dim_in = m_perp.dim_out = n * chi;
      m_perp.apply = [&](const cdouble* x, cdouble* y) {
        DenseTensor xt(std::vector<long>{n, chi});
        std::copy(x, x + n * chi, xt.data());
        DenseTensor px = project_perp(xt);
        std::vector<cdouble> col(static_cast<size_t>(n)), out(static_cast<size_t>(n));
        for (long j = 0; j < chi; ++j) {
          for (long i = 0; i < n; ++i) col[static_cast<size_t>(i)] = px[i * chi + j];
          apply_m.apply(col.data(), out.data());
          for (long i = 0; i < n; ++i) y[i * chi + j] = out[static_cast<size_t>(i)];
        }
      };
      auto sol = solve_sylvester(m_perp, c, rhs, &cinv, tol, maxiter);
      gamma = project_perp(sol.gamma);
    } else {
      // truncated eigenvalues treated as zero: gamma = rhs * C_broadened^{-1}
      std::vector<double> cinv_b(static_cast<size_t>(chi));
      for (long i = 0; i < chi; ++i) {
        double x = c_diag[static_cast<size_t>(i)];
        double denom =
            mode.form == GradMode::Broadening::paper_printed ? x * x - mode.epsilon : x * x + mode.epsilon;
        cinv_b[static_cast<size_t>(i)] = x / denom;
      }
      gamma = right_scale(rhs, cinv_b);
    }
    g_m += matmul(gamma, pdag);
  }
  return herm_sym(g_m);
}

DenseTensor svd_trunc_vjp(const DenseTensor& g_u, const std::vector<double>& g_s,
                          const DenseTensor& g_v, const DenseTensor& a, const DenseTensor& u,
                          const std::vector<double>& s, const DenseTensor& v, const GradMode& mode,
                          double tol, long maxiter) {
  check_lorentzian(mode);
  const long m = u.dim(0), n = v.dim(0), k = u.dim(1);
  if (v.dim(1) != k || static_cast<long>(s.size()) != k)
    throw ShapeError("svd_trunc_vjp: inconsistent kept rank");
  if (g_u.shape() != u.shape() || g_v.shape() != v.shape())
    throw ShapeError("svd_trunc_vjp: cotangent shape mismatch");

  const bool have_gu = g_u.max_abs() > 0, have_gv = g_v.max_abs() > 0;
  double smax = 0.0, smin = 1e300;
  for (double x : s) {
    smax = std::max(smax, x);
    smin = std::min(smin, x);
  }
  if ((have_gu || have_gv) && smin <= 1e-14 * std::max(smax, 1e-300))
    throw NumericError(
        "svd_trunc_vjp: zero singular value in the kept set; drop exact-zero modes before "
        "differentiating");

  const DenseTensor udag = dagger(u), vdag = dagger(v);
  DenseTensor g_a(std::vector<long>{m, n});

  // G^S
  {
    DenseTensor gs(std::vector<long>{k, k});
    for (long i = 0; i < k; ++i) gs[i * k + i] = g_s[static_cast<size_t>(i)];
    g_a += matmul(u, matmul(gs, vdag));
  }

  const bool classic_rotations = mode.kind != GradMode::Kind::dp_zero;
  if (classic_rotations && (have_gu || have_gv)) {
    std::vector<double> s2(static_cast<size_t>(k));
    for (long i = 0; i < k; ++i) s2[static_cast<size_t>(i)] = s[static_cast<size_t>(i)] * s[static_cast<size_t>(i)];
    double eps = mode.kind == GradMode::Kind::exact ? 0.0 : mode.epsilon;
    DenseTensor f = broadened_f(s2, eps, mode.form);
    if (have_gu) {
      DenseTensor kmat = matmul(udag, g_u);
      DenseTensor anti = kmat - dagger(kmat);
      g_a += matmul(u, matmul(right_scale(hadamard(f, anti), s), vdag));
    }
    if (have_gv) {
      DenseTensor kmat = matmul(vdag, g_v);
      DenseTensor fa = hadamard(f, kmat - dagger(kmat));
      for (long i = 0; i < k; ++i)
        for (long j = 0; j < k; ++j) fa[i * k + j] *= s[static_cast<size_t>(i)];
      g_a += matmul(u, matmul(fa, vdag));
    }
  }

  // G^{diag}: the V-attached phase-gauge term
  if (have_gv) {
    DenseTensor q = matmul(vdag, g_v);
    DenseTensor d(std::vector<long>{k, k});
    for (long i = 0; i < k; ++i) {
      cdouble qi = q[i * k + i];
      d[i * k + i] = (std::conj(qi) - qi) * 0.5 / s[static_cast<size_t>(i)];
    }
    g_a += matmul(u, matmul(d, vdag));
  }

  // G^{trunc}: discarded spectrum via the coupled Sylvester pair
  if (mode.kind == GradMode::Kind::exact && (have_gu || have_gv)) {
    auto perp_u = [&](const DenseTensor& x) { return x - matmul(u, matmul(udag, x)); };
    auto perp_v = [&](const DenseTensor& x) { return x - matmul(v, matmul(vdag, x)); };
    DenseTensor rhs_u = perp_u(g_u), rhs_v = perp_v(g_v);
    if (rhs_u.max_abs() > 0 || rhs_v.max_abs() > 0) {
      // stacked unknown Z = [gamma; gamma_tilde], Z S - L(Z) = RHS
      DenseTensor rhs(std::vector<long>{m + n, k});
      for (long i = 0; i < m; ++i)
        for (long j = 0; j < k; ++j) rhs[i * k + j] = rhs_u[i * k + j];
      for (long i = 0; i < n; ++i)
        for (long j = 0; j < k; ++j) rhs[(m + i) * k + j] = rhs_v[i * k + j];
      DenseTensor smat(std::vector<long>{k, k}), sinv(std::vector<long>{k, k});
      for (long i = 0; i < k; ++i) {
        smat[i * k + i] = s[static_cast<size_t>(i)];
        sinv[i * k + i] = 1.0 / s[static_cast<size_t>(i)];
      }
      LinearMap coupled;
      coupled.dim_in = coupled.dim_out = (m + n) * k;
      coupled.apply = [&](const cdouble* x, cdouble* y) {
        DenseTensor ga(std::vector<long>{m, k}), gb(std::vector<long>{n, k});
        std::copy(x, x + m * k, ga.data());
        std::copy(x + m * k, x + (m + n) * k, gb.data());
        ga = perp_u(ga);
        gb = perp_v(gb);
        DenseTensor ya = matmul(a, gb);             // A (1-VV+) gamma_tilde
        DenseTensor yb = matmul(dagger(a), ga);     // A+ (1-UU+) gamma
        for (long i = 0; i < m * k; ++i) y[i] = ya[i];
        for (long i = 0; i < n * k; ++i) y[m * k + i] = yb[i];
      };
      auto sol = solve_sylvester(coupled, smat, rhs, &sinv, tol, maxiter);
      DenseTensor gamma(std::vector<long>{m, k}), gamma_t(std::vector<long>{n, k});
      for (long i = 0; i < m * k; ++i) gamma[i] = sol.gamma[i];
      for (long i = 0; i < n * k; ++i) gamma_t[i] = sol.gamma[m * k + i];
      gamma = perp_u(gamma);
      gamma_t = perp_v(gamma_t);
      g_a += matmul(gamma, vdag);
      g_a += matmul(u, dagger(gamma_t));
    }
  }
  return g_a;
}

}  // namespace ctm

#include "ctm/engine.hpp"

#include <random>

#include "ctm/c4v.hpp"
#include "ctm/contract.hpp"

namespace ctm {

PepsTensor make_peps(DenseTensor t, double c4v_tol) {
  if (t.rank() != 5) throw ShapeError("make_peps expects a rank-5 tensor");
  for (long ax = 2; ax <= 4; ++ax)
    if (t.dim(ax) != t.dim(1)) throw ShapeError("make_peps: virtual dimensions differ");
  if (!t.all_finite()) throw NumericError("make_peps: non-finite entries");
  double scale = t.max_abs();
  if (scale == 0) throw NumericError("make_peps: zero tensor");
  if (c4v_asymmetry(t) > c4v_tol * scale)
    throw NumericError("make_peps: tensor is not C4V symmetric to tolerance");
  PepsTensor p;
  p.phys = t.dim(0);
  p.bond = t.dim(1);
  p.a = std::move(t);
  return p;
}

DoubleTensor build_double_tensor(const PepsTensor& peps) {
  const long d2 = peps.bond * peps.bond;
  // (t', t, r', r, b', b, l', l), primed = conj layer (bra), bra-major pairs
  DenseTensor raw =
      contract_flagged({&peps.a, &peps.a},
                       {{1, -2, -4, -6, -8}, {1, -1, -3, -5, -7}}, {false, true});
  DoubleTensor out;
  out.bond = peps.bond;
  out.a = raw.reshaped({d2, d2, d2, d2});
  return out;
}

DenseTensor edge_swap_herm(const DenseTensor& t, long bond) {
  const long chi = t.dim(0);
  DenseTensor r = t.reshaped({chi, bond, bond, chi}).permuted({3, 2, 1, 0}).conjugate();
  return r.reshaped({chi, bond * bond, chi});
}

double edge_herm_residual(const DenseTensor& t, long bond) {
  return max_abs_diff(t, edge_swap_herm(t, bond)) / std::max(t.max_abs(), 1e-300);
}

namespace {

DenseTensor scale_third_axis(const DenseTensor& t, const std::vector<double>& c) {
  DenseTensor out = t;
  const long chi = t.dim(2);
  const long rows = t.size() / chi;
  for (long r = 0; r < rows; ++r)
    for (long k = 0; k < chi; ++k) out[r * chi + k] *= c[static_cast<size_t>(k)];
  return out;
}

}  // namespace

EnlargedCorner build_enlarged_corner(const Environment& env, const DoubleTensor& a,
                                     long dense_limit) {
  const long chi = env.chi(), d2 = a.a.dim(0);
  if (env.t.dim(1) != d2) throw ShapeError("build_enlarged_corner: bond dimension mismatch");
  const long dim = chi * d2;
  EnlargedCorner out;
  out.dim = dim;

  // TC_{chi1, l, alpha} = T_{chi1, l, alpha} c_alpha
  DenseTensor tc = scale_third_axis(env.t, env.c);

  if (dim <= dense_limit) {
    // M_{(chi1 B),(chi2 R)} = sum TC_{chi1,l,al} T_{al,t,chi2} a_{t,R,B,l}
    DenseTensor m = contract({tc, env.t, a.a}, {{-1, 1, 2}, {2, 3, -3}, {3, -4, -2, 1}});
    m = m.reshaped({dim, dim});
    m = (m + dagger(m)) * cdouble(0.5, 0.0);
    out.dense = m;
    auto md = std::make_shared<DenseTensor>(*out.dense);
    out.map.dim_in = out.map.dim_out = dim;
    out.map.apply = [md, dim](const cdouble* x, cdouble* y) {
      for (long i = 0; i < dim; ++i) {
        cdouble s = 0.0;
        const cdouble* row = md->data() + i * dim;
        for (long j = 0; j < dim; ++j) s += row[j] * x[j];
        y[i] = s;
      }
    };
    return out;
  }

  auto tcs = std::make_shared<DenseTensor>(std::move(tc));
  auto ts = std::make_shared<DenseTensor>(env.t);
  auto as = std::make_shared<DenseTensor>(a.a);
  out.map.dim_in = out.map.dim_out = dim;
  out.map.apply = [tcs, ts, as, chi, d2](const cdouble* x, cdouble* y) {
    DenseTensor v(std::vector<long>{chi, d2});
    std::copy(x, x + chi * d2, v.data());
    auto raw = [&](const DenseTensor& w) {
      return contract({*tcs, *ts, *as, w}, {{-1, 1, 2}, {2, 3, 4}, {3, 5, -2, 1}, {4, 5}});
    };
    auto raw_t = [&](const DenseTensor& w) {  // transpose of the map above
      return contract({*tcs, *ts, *as, w}, {{1, 2, 3}, {3, 4, -1}, {4, -2, 5, 2}, {1, 5}});
    };
    // (M + M^dagger)/2 x with M^dagger x = conj(M^T conj(x))
    DenseTensor m1 = raw(v);
    DenseTensor m2 = raw_t(v.conjugate()).conjugate();
    for (long i = 0; i < chi * d2; ++i) y[i] = 0.5 * (m1[i] + m2[i]);
  };
  return out;
}

TruncationDecision truncate_spectrum(const std::vector<double>& s_full, long chi_target,
                                     double multiplet_tol) {
  if (s_full.empty()) throw ShapeError("truncate_spectrum: empty spectrum");
  if (chi_target < 1) throw ShapeError("truncate_spectrum: chi_target must be >= 1");
  const long n = static_cast<long>(s_full.size());
  if (chi_target >= n) return {n, false};
  const double scale = std::max(std::abs(s_full[0]), 1e-300);
  long cut = chi_target;  // keep s[0..cut)
  while (cut >= 1) {
    double gap = std::abs(s_full[static_cast<size_t>(cut - 1)]) -
                 std::abs(s_full[static_cast<size_t>(cut)]);
    if (gap / scale >= multiplet_tol) return {cut, false};
    --cut;
  }
  return {chi_target, true};
}

CtmStep ctm_step(const Environment& env, const DoubleTensor& a, long chi_target,
                 double multiplet_tol) {
  const long d2 = a.a.dim(0);
  EnlargedCorner corner = build_enlarged_corner(env, a);
  if (!corner.dense)
    throw NumericError("ctm_step: enlarged corner too large for the dense eigensolver");
  auto eig = hermitian_eig(*corner.dense);
  auto cut = truncate_spectrum(eig.values, chi_target, multiplet_tol);
  const long chi_eff = cut.chi_eff;
  const long dim = corner.dim;

  TruncatedEig trunc;
  trunc.chi_eff = chi_eff;
  trunc.multiplet_warning = cut.warned;
  trunc.s_full = eig.values;
  trunc.s_kept.assign(eig.values.begin(), eig.values.begin() + chi_eff);
  trunc.p = DenseTensor(std::vector<long>{dim, chi_eff});
  for (long i = 0; i < dim; ++i)
    for (long k = 0; k < chi_eff; ++k) trunc.p[i * chi_eff + k] = eig.vectors[i * dim + k];

  Environment out;
  const double nu = std::abs(trunc.s_kept[0]);
  out.c.resize(static_cast<size_t>(chi_eff));
  for (long k = 0; k < chi_eff; ++k) out.c[static_cast<size_t>(k)] = trunc.s_kept[static_cast<size_t>(k)] / nu;

  // T'_{al, B, be} = conj(P)_{(chia l), al} T_{chia, t, chib} a_{t,r,B,l} P_{(chib r), be}
  const long chi = env.chi();
  DenseTensor pt = trunc.p.reshaped({chi, d2, chi_eff});
  DenseTensor tp = contract_flagged(
      {&pt, &env.t, &a.a, &pt},
      {{1, 2, -1}, {1, 3, 4}, {3, 5, -2, 2}, {4, 5, -3}}, {true, false, false, false});
  tp = (tp + edge_swap_herm(tp, a.bond)) * cdouble(0.5, 0.0);
  double m = tp.max_abs();
  if (m == 0) throw NumericError("ctm_step: edge tensor vanished");
  tp *= cdouble(1.0 / m, 0.0);
  out.t = std::move(tp);
  return CtmStep{std::move(out), std::move(trunc)};
}

Environment initial_environment(const DoubleTensor& a, const CtmOptions& opts) {
  const long d2 = a.a.dim(0);
  Environment env;
  if (opts.random_init) {
    std::mt19937_64 gen(opts.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const long chi0 = std::min<long>(opts.chi, d2);
    env.c.resize(static_cast<size_t>(chi0));
    for (auto& x : env.c) x = unif(gen);
    std::sort(env.c.begin(), env.c.end(), std::greater<double>());
    double top = env.c[0];
    for (auto& x : env.c) x /= top;
    DenseTensor t(std::vector<long>{chi0, d2, chi0});
    for (long i = 0; i < t.size(); ++i) t[i] = unif(gen) - 0.5;
    t = (t + edge_swap_herm(t, a.bond)) * cdouble(0.5, 0.0);
    t *= cdouble(1.0 / t.max_abs(), 0.0);
    env.t = std::move(t);
    return env;
  }

  // single-site reduction with uniform boundary vectors
  DenseTensor u(std::vector<long>{d2});
  for (long i = 0; i < d2; ++i) u[i] = 1.0;
  DenseTensor c0 = contract({a.a, u, u}, {{1, -1, -2, 2}, {1}, {2}});  // (R, B)
  c0 = (c0 + dagger(c0)) * cdouble(0.5, 0.0);
  auto eig = hermitian_eig(c0);
  double nu = std::abs(eig.values[0]);
  if (nu == 0) throw NumericError("initial_environment: degenerate single-site reduction");
  env.c.resize(static_cast<size_t>(d2));
  for (long k = 0; k < d2; ++k) env.c[static_cast<size_t>(k)] = eig.values[static_cast<size_t>(k)] / nu;

  DenseTensor t0 = contract({a.a, u}, {{1, -3, -2, -1}, {1}});  // (L, B, R)
  DenseTensor w = eig.vectors;
  DenseTensor t1 = contract_flagged({&w, &t0, &w}, {{1, -1}, {1, -2, 2}, {2, -3}},
                                    {true, false, false});
  t1 = (t1 + edge_swap_herm(t1, a.bond)) * cdouble(0.5, 0.0);
  t1 *= cdouble(1.0 / t1.max_abs(), 0.0);
  env.t = std::move(t1);
  return env;
}

CtmResult converge_ctm(const DoubleTensor& a, const CtmOptions& opts) {
  if (opts.tol <= 0) throw ShapeError("converge_ctm: tol must be positive");
  Environment env = opts.warm_start ? *opts.warm_start : initial_environment(a, opts);
  CtmResult res;
  for (long it = 1; it <= opts.maxiter; ++it) {
    CtmStep step = ctm_step(env, a, opts.chi, opts.multiplet_tol);
    const auto& cn = step.env.c;
    const auto& co = env.c;
    double dist = 0.0;
    const size_t nmax = std::max(cn.size(), co.size());
    for (size_t k = 0; k < nmax; ++k) {
      double a0 = k < co.size() ? co[k] : 0.0;
      double a1 = k < cn.size() ? cn[k] : 0.0;
      dist = std::max(dist, std::abs(a1 - a0));
    }
    res.env_prev = std::move(env);
    env = step.env;
    res.eig = std::move(step.eig);
    res.niter = it;
    res.spectrum_distance = dist;
    if (dist <= opts.tol) {
      res.env = std::move(env);
      return res;
    }
  }
  throw ConvergenceError("converge_ctm: no fixed point within " + std::to_string(opts.maxiter) +
                             " iterations",
                         res.spectrum_distance);
}

CtmResult converge_ctm(const PepsTensor& peps, const CtmOptions& opts) {
  return converge_ctm(build_double_tensor(peps), opts);
}

double renormalization_residual(const Environment& env, const TruncatedEig& eig,
                                const DoubleTensor& a) {
  const long d2 = a.a.dim(0), chi = env.chi(), chi_eff = eig.chi_eff;
  if (eig.p.dim(0) != chi * d2)
    throw ShapeError("renormalization_residual: eig and env dimensions differ");

  EnlargedCorner corner = build_enlarged_corner(env, a);
  DenseTensor k = matmul(dagger(eig.p), matmul(*corner.dense, eig.p));
  double nu = 0.0;
  for (long i = 0; i < chi_eff; ++i) nu = std::max(nu, std::abs(k[i * chi_eff + i]));
  DenseTensor cm(std::vector<long>{chi_eff, chi_eff});
  for (long i = 0; i < chi_eff; ++i) cm[i * chi_eff + i] = env.c[static_cast<size_t>(i)];
  double r1 = (k * cdouble(1.0 / nu, 0) - cm).frobenius_norm() / cm.frobenius_norm();

  DenseTensor pt = eig.p.reshaped({chi, d2, chi_eff});
  DenseTensor tp = contract_flagged(
      {&pt, &env.t, &a.a, &pt},
      {{1, 2, -1}, {1, 3, 4}, {3, 5, -2, 2}, {4, 5, -3}}, {true, false, false, false});
  tp = (tp + edge_swap_herm(tp, a.bond)) * cdouble(0.5, 0.0);
  tp *= cdouble(1.0 / tp.max_abs(), 0.0);
  double r2 = (tp - env.t).frobenius_norm() / env.t.frobenius_norm();
  return std::max(r1, r2);
}

}  // namespace ctm

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctm/ad_rules.hpp"
#include "ctm/contract.hpp"
#include "support/oracles.hpp"
#include "support/random.hpp"

using namespace ctm;
using namespace ctm::testsupport;

namespace {

DenseTensor herm_sym(const DenseTensor& m) { return (m + dagger(m)) * cdouble(0.5, 0.0); }

struct EigCase {
  DenseTensor m;          // Hermitian
  DenseTensor p;          // kept isometry
  std::vector<double> s;  // kept eigenvalues
  long chi;
};

EigCase make_eig_case(const std::vector<double>& spec, long chi, unsigned seed) {
  auto gen = rng(seed);
  const long n = static_cast<long>(spec.size());
  DenseTensor q = random_unitary(n, gen);
  EigCase c;
  c.m = make_spectrum_matrix(spec, q);
  auto eig = hermitian_eig(c.m);
  c.chi = chi;
  c.p = DenseTensor(std::vector<long>{n, chi});
  c.s.assign(eig.values.begin(), eig.values.begin() + chi);
  for (long i = 0; i < n; ++i)
    for (long k = 0; k < chi; ++k) c.p[i * chi + k] = eig.vectors[i * n + k];
  return c;
}

// gauge-invariant cost E(M) = 2 Re <W, X> with X = P C P^dagger the kept part
double eig_cost(const DenseTensor& m, long chi, const DenseTensor& w) {
  auto eig = hermitian_eig(m);
  const long n = m.dim(0);
  DenseTensor x(std::vector<long>{n, n});
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      cdouble s = 0.0;
      for (long k = 0; k < chi; ++k)
        s += eig.vectors[i * n + k] * eig.values[static_cast<size_t>(k)] *
             std::conj(eig.vectors[j * n + k]);
      x[i * n + j] = s;
    }
  return 2.0 * hs_inner(w, x).real();
}

// cotangents of the cost above in the (P, C) parameterization
void eig_cost_cotangents(const EigCase& c, const DenseTensor& w, DenseTensor& g_c,
                         DenseTensor& g_p) {
  DenseTensor cmat(std::vector<long>{c.chi, c.chi});
  for (long i = 0; i < c.chi; ++i) cmat[i * c.chi + i] = c.s[static_cast<size_t>(i)];
  g_c = matmul(dagger(c.p), matmul(w, c.p));
  g_p = matmul(w + dagger(w), matmul(c.p, cmat));
}

}  // namespace

TEST_CASE("broadened_f spec values") {
  DenseTensor f = broadened_f({2, 1}, 0.0, GradMode::Broadening::regularized);
  CHECK(f.at({0, 1}).real() == doctest::Approx(-1.0));
  CHECK(f.at({1, 0}).real() == doctest::Approx(1.0));

  DenseTensor fd = broadened_f({1, 1}, 0.0, GradMode::Broadening::regularized);
  CHECK(std::isinf(fd.at({0, 1}).real()));

  DenseTensor fr = broadened_f({2, 1}, 1e-2, GradMode::Broadening::regularized);
  CHECK(fr.at({1, 0}).real() == doctest::Approx(1.0 / 1.01));
  DenseTensor fp = broadened_f({2, 1}, 1e-2, GradMode::Broadening::paper_printed);
  CHECK(fp.at({1, 0}).real() == doctest::Approx(1.0 / 0.99));
}

TEST_CASE("eig vjp: zero cotangents give zero") {
  auto c = make_eig_case({5, 4, 3, 1, 0.5}, 2, 3);
  DenseTensor zc(std::vector<long>{2, 2}), zp(std::vector<long>{5, 2});
  for (auto mode : {GradMode::exact(), GradMode::lorentzian(1e-8), GradMode::dp_zero()}) {
    DenseTensor g = eig_trunc_vjp(zc, zp, dense_map(c.m), c.p, c.s, mode);
    CHECK(g.max_abs() == 0.0);
  }
}

TEST_CASE("eig vjp exact mode matches finite differences") {
  std::vector<double> spec{5.0, 4.2, -3.7, 3.1, 1.2, -0.9, 0.7, 0.4, -0.3, 0.2, 0.1, -0.05};
  auto c = make_eig_case(spec, 4, 17);
  auto gen = rng(99);
  DenseTensor w = random_tensor({12, 12}, gen);
  w = herm_sym(w);

  DenseTensor g_c, g_p;
  eig_cost_cotangents(c, w, g_c, g_p);
  DenseTensor g_m = eig_trunc_vjp(g_c, g_p, dense_map(c.m), c.p, c.s, GradMode::exact(), 1e-12);

  auto cost = [&](const DenseTensor& m) { return eig_cost(m, 4, w); };
  double worst = 0.0;
  for (long i = 0; i < 12; ++i)
    for (long j = i; j < 12; ++j)
      for (int part = 0; part < (i == j ? 1 : 2); ++part) {
        DenseTensor dir = herm_dir(12, i, j, part);
        double fd = fd_directional(cost, c.m, dir, 1e-4);
        double an = 2.0 * hs_inner(g_m, dir).real();
        worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
      }
  CHECK(worst < 1e-9);
}

TEST_CASE("eig vjp exact is finite and correct on a degenerate kept multiplet") {
  // kept spectrum has an exact 3-fold degeneracy; no epsilon anywhere
  std::vector<double> spec{4.0, 3.0, 3.0, 3.0, 0.8, 0.5, 0.2, 0.1};
  auto c = make_eig_case(spec, 4, 5);
  auto gen = rng(7);
  DenseTensor w = herm_sym(random_tensor({8, 8}, gen));
  DenseTensor g_c, g_p;
  eig_cost_cotangents(c, w, g_c, g_p);

  DenseTensor g_m = eig_trunc_vjp(g_c, g_p, dense_map(c.m), c.p, c.s, GradMode::exact(), 1e-12);
  CHECK(g_m.all_finite());

  auto cost = [&](const DenseTensor& m) { return eig_cost(m, 4, w); };
  double worst = 0.0;
  for (long i = 0; i < 8; ++i)
    for (long j = i; j < 8; ++j)
      for (int part = 0; part < (i == j ? 1 : 2); ++part) {
        DenseTensor dir = herm_dir(8, i, j, part);
        double fd = fd_directional(cost, c.m, dir, 1e-4);
        double an = 2.0 * hs_inner(g_m, dir).real();
        worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
      }
  CHECK(worst < 1e-8);

  // Q-freedom: rotating P by a unitary acting inside the degenerate kept
  // multiplet (it commutes with C) leaves G_M unchanged
  auto gen2 = rng(31);
  DenseTensor blk = random_unitary(3, gen2);
  DenseTensor omega = identity_matrix(4);
  for (long i = 0; i < 3; ++i)
    for (long j = 0; j < 3; ++j) omega[(1 + i) * 4 + (1 + j)] = blk[i * 3 + j];
  DenseTensor p2 = matmul(c.p, omega);
  DenseTensor g_c2 = matmul(dagger(omega), matmul(g_c, omega));
  DenseTensor g_p2 = matmul(g_p, omega);
  DenseTensor g_m2 = eig_trunc_vjp(g_c2, g_p2, dense_map(c.m), p2, c.s, GradMode::exact(), 1e-12);
  CHECK(max_abs_diff(g_m, g_m2) < 1e-10 * std::max(1.0, g_m.max_abs()));
}

TEST_CASE("lorentzian output blows up as epsilon -> 0 near a degenerate multiplet") {
  // splitting 1e-10 inside the kept block; cotangents as they arrive
  // mid-pipeline (the edge-tensor path gives G_P with O(1) couplings between
  // the nearly degenerate modes). The broadened rule amplifies those by
  // 1/split once eps << split^2; the exact rule stays bounded with no eps.
  const double split = 1e-10;
  std::vector<double> spec{4.0, 3.0 + split, 3.0, 3.0 - split, 0.8, 0.5, 0.2, 0.1};
  auto c = make_eig_case(spec, 4, 5);
  auto gen = rng(7);
  DenseTensor g_c = random_tensor({4, 4}, gen);
  DenseTensor g_p = random_tensor({8, 4}, gen);

  DenseTensor exact = eig_trunc_vjp(g_c, g_p, dense_map(c.m), c.p, c.s, GradMode::exact(), 1e-12);
  CHECK(exact.all_finite());

  double worst = 0.0;
  for (double eps : {1e-8, 1e-16, 1e-24, 1e-30}) {
    DenseTensor g =
        eig_trunc_vjp(g_c, g_p, dense_map(c.m), c.p, c.s, GradMode::lorentzian(eps), 1e-12);
    if (!g.all_finite()) {
      worst = 1e300;
      break;
    }
    worst = std::max(worst, g.max_abs());
  }
  CHECK(worst > 1e6 * exact.max_abs());

  CHECK_THROWS_AS(
      eig_trunc_vjp(g_c, g_p, dense_map(c.m), c.p, c.s, GradMode::lorentzian(0.0), 1e-12),
      std::invalid_argument);
}

TEST_CASE("untruncated exact mode equals the classic dense rule") {
  std::vector<double> spec{5.0, 4.2, -3.7, 3.1, 1.2, -0.9};
  auto c = make_eig_case(spec, 6, 23);
  auto gen = rng(41);
  DenseTensor w = herm_sym(random_tensor({6, 6}, gen));
  DenseTensor g_c, g_p;
  eig_cost_cotangents(c, w, g_c, g_p);
  DenseTensor g_exact = eig_trunc_vjp(g_c, g_p, dense_map(c.m), c.p, c.s, GradMode::exact(), 1e-13);

  // classic rule assembled densely from ds = 1 o (U+ dM U), domega' with F
  auto eig = hermitian_eig(c.m);
  const long n = 6;
  DenseTensor u = eig.vectors;
  DenseTensor g_s(std::vector<long>{n, n});
  DenseTensor uhwu = matmul(dagger(u), matmul(w, u));
  for (long i = 0; i < n; ++i) g_s[i * n + i] = uhwu[i * n + i].real();
  // G_U for the same cost: (W + W^dagger) U diag(s)
  DenseTensor g_u = matmul(w + dagger(w), u);
  for (long i = 0; i < n; ++i)
    for (long k = 0; k < n; ++k) g_u[i * n + k] *= eig.values[static_cast<size_t>(k)];
  DenseTensor f = broadened_f(eig.values, 0.0, GradMode::Broadening::regularized);
  DenseTensor inner = matmul(dagger(u), g_u);
  for (long i = 0; i < n * n; ++i) inner[i] *= f[i];
  DenseTensor g_classic = herm_sym(matmul(u, matmul(g_s + inner, dagger(u))));

  CHECK(max_abs_diff(g_exact, g_classic) < 1e-11 * std::max(1.0, g_classic.max_abs()));
}

namespace {

struct SvdCase {
  DenseTensor a, u, v;
  std::vector<double> s;
  long k;
};

SvdCase make_svd_case(long m, long n, const std::vector<double>& sv, long k, unsigned seed) {
  auto gen = rng(seed);
  DenseTensor bu = random_unitary(m, gen);
  DenseTensor bv = random_unitary(n, gen);
  DenseTensor a(std::vector<long>{m, n});
  const long r = static_cast<long>(sv.size());
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < n; ++j) {
      cdouble x = 0.0;
      for (long q = 0; q < r; ++q)
        x += bu[i * m + q] * sv[static_cast<size_t>(q)] * std::conj(bv[j * n + q]);
      a[i * n + j] = x;
    }
  auto dec = svd(a);
  SvdCase c;
  c.a = a;
  c.k = k;
  c.u = DenseTensor(std::vector<long>{m, k});
  c.v = DenseTensor(std::vector<long>{n, k});
  c.s.assign(dec.s.begin(), dec.s.begin() + k);
  for (long i = 0; i < m; ++i)
    for (long q = 0; q < k; ++q) c.u[i * k + q] = dec.u[i * std::min(m, n) + q];
  for (long i = 0; i < n; ++i)
    for (long q = 0; q < k; ++q) c.v[i * k + q] = dec.v[i * std::min(m, n) + q];
  return c;
}

// gauge-invariant cost E(A) = 2 Re <W, U_k S_k V_k^dagger>
double svd_cost(const DenseTensor& a, long k, const DenseTensor& w) {
  auto dec = svd(a);
  const long m = a.dim(0), n = a.dim(1), kk = std::min(m, n);
  DenseTensor x(std::vector<long>{m, n});
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < n; ++j) {
      cdouble s = 0.0;
      for (long q = 0; q < k; ++q)
        s += dec.u[i * kk + q] * dec.s[static_cast<size_t>(q)] * std::conj(dec.v[j * kk + q]);
      x[i * n + j] = s;
    }
  return 2.0 * hs_inner(w, x).real();
}

void svd_cost_cotangents(const SvdCase& c, const DenseTensor& w, DenseTensor& g_u,
                         std::vector<double>& g_s, DenseTensor& g_v) {
  g_u = matmul(w, c.v);
  for (long i = 0; i < c.u.dim(0); ++i)
    for (long q = 0; q < c.k; ++q) g_u[i * c.k + q] *= c.s[static_cast<size_t>(q)];
  DenseTensor uwv = matmul(dagger(c.u), matmul(w, c.v));
  g_s.resize(static_cast<size_t>(c.k));
  for (long q = 0; q < c.k; ++q) g_s[static_cast<size_t>(q)] = uwv[q * c.k + q].real();
  g_v = matmul(dagger(w), c.u);
  for (long i = 0; i < c.v.dim(0); ++i)
    for (long q = 0; q < c.k; ++q) g_v[i * c.k + q] *= c.s[static_cast<size_t>(q)];
}

}  // namespace

TEST_CASE("svd vjp: zero cotangents give zero") {
  auto c = make_svd_case(6, 4, {3, 2, 1, 0.5}, 2, 3);
  DenseTensor zu(c.u.shape()), zv(c.v.shape());
  std::vector<double> zs(static_cast<size_t>(c.k), 0.0);
  for (auto mode : {GradMode::exact(), GradMode::lorentzian(1e-8), GradMode::dp_zero()}) {
    DenseTensor g = svd_trunc_vjp(zu, zs, zv, c.a, c.u, c.s, c.v, mode);
    CHECK(g.max_abs() == 0.0);
  }
}

TEST_CASE("svd vjp exact mode matches finite differences, lorentzian is worse") {
  auto c = make_svd_case(8, 6, {3.0, 2.5, 2.0, 0.5, 0.3, 0.1}, 3, 11);
  auto gen = rng(13);
  DenseTensor w = random_tensor({8, 6}, gen);
  DenseTensor g_u, g_v;
  std::vector<double> g_s;
  svd_cost_cotangents(c, w, g_u, g_s, g_v);

  DenseTensor g_a = svd_trunc_vjp(g_u, g_s, g_v, c.a, c.u, c.s, c.v, GradMode::exact(), 1e-12);
  DenseTensor g_lor =
      svd_trunc_vjp(g_u, g_s, g_v, c.a, c.u, c.s, c.v, GradMode::lorentzian(1e-12), 1e-12);

  auto cost = [&](const DenseTensor& a) { return svd_cost(a, 3, w); };
  double worst = 0.0, worst_lor = 0.0;
  for (long i = 0; i < c.a.size(); ++i)
    for (int part = 0; part < 2; ++part) {
      DenseTensor dir(c.a.shape());
      dir[i] = part == 0 ? cdouble(1, 0) : cdouble(0, 1);
      double fd = fd_directional(cost, c.a, dir, 1e-4);
      double an = 2.0 * (part == 0 ? g_a[i].real() : g_a[i].imag());
      double an_lor = 2.0 * (part == 0 ? g_lor[i].real() : g_lor[i].imag());
      worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
      worst_lor = std::max(worst_lor, std::abs(fd - an_lor) / std::max(1.0, std::abs(fd)));
    }
  CHECK(worst < 1e-9);
  CHECK(worst_lor > worst);
}

TEST_CASE("square untruncated svd vjp equals the classic four-term rule") {
  auto c = make_svd_case(5, 5, {3.0, 2.2, 1.5, 0.9, 0.4}, 5, 29);
  auto gen = rng(37);
  DenseTensor w = random_tensor({5, 5}, gen);
  DenseTensor g_u, g_v;
  std::vector<double> g_s;
  svd_cost_cotangents(c, w, g_u, g_s, g_v);
  DenseTensor g_exact = svd_trunc_vjp(g_u, g_s, g_v, c.a, c.u, c.s, c.v, GradMode::exact(), 1e-13);

  // classic rule assembled in place
  const long k = 5;
  std::vector<double> s2(5);
  for (long i = 0; i < 5; ++i) s2[static_cast<size_t>(i)] = c.s[static_cast<size_t>(i)] * c.s[static_cast<size_t>(i)];
  DenseTensor f = broadened_f(s2, 0.0, GradMode::Broadening::regularized);
  DenseTensor udag = dagger(c.u), vdag = dagger(c.v);
  DenseTensor gs(std::vector<long>{k, k});
  for (long i = 0; i < k; ++i) gs[i * k + i] = g_s[static_cast<size_t>(i)];
  DenseTensor term_s = matmul(c.u, matmul(gs, vdag));
  DenseTensor ku = matmul(udag, g_u);
  DenseTensor ju = ku - dagger(ku);
  for (long i = 0; i < k * k; ++i) ju[i] *= f[i];
  for (long i = 0; i < k; ++i)
    for (long j = 0; j < k; ++j) ju[i * k + j] *= c.s[static_cast<size_t>(j)];
  DenseTensor term_u = matmul(c.u, matmul(ju, vdag));
  DenseTensor kv = matmul(vdag, g_v);
  DenseTensor jv = kv - dagger(kv);
  for (long i = 0; i < k * k; ++i) jv[i] *= f[i];
  for (long i = 0; i < k; ++i)
    for (long j = 0; j < k; ++j) jv[i * k + j] *= c.s[static_cast<size_t>(i)];
  DenseTensor term_v = matmul(c.u, matmul(jv, vdag));
  DenseTensor dd(std::vector<long>{k, k});
  for (long i = 0; i < k; ++i) {
    cdouble q = kv[i * k + i];
    dd[i * k + i] = (std::conj(q) - q) * 0.5 / c.s[static_cast<size_t>(i)];
  }
  DenseTensor term_d = matmul(c.u, matmul(dd, vdag));
  DenseTensor g_classic = term_s + term_u + term_v + term_d;

  CHECK(max_abs_diff(g_exact, g_classic) < 1e-12 * std::max(1.0, g_classic.max_abs()));
}

TEST_CASE("svd vjp phase gauge invariance") {
  auto c = make_svd_case(7, 5, {3.0, 2.5, 2.0, 0.4, 0.2}, 3, 43);
  auto gen = rng(51);
  DenseTensor w = random_tensor({7, 5}, gen);
  DenseTensor g_u, g_v;
  std::vector<double> g_s;
  svd_cost_cotangents(c, w, g_u, g_s, g_v);
  DenseTensor g_a = svd_trunc_vjp(g_u, g_s, g_v, c.a, c.u, c.s, c.v, GradMode::exact(), 1e-12);

  // rephase each kept mode of U and V together; cotangents follow suit
  std::uniform_real_distribution<double> unif(0, 6.28);
  SvdCase c2 = c;
  DenseTensor g_u2 = g_u, g_v2 = g_v;
  for (long q = 0; q < c.k; ++q) {
    cdouble ph = std::exp(cdouble(0, unif(gen)));
    for (long i = 0; i < c.u.dim(0); ++i) {
      c2.u[i * c.k + q] *= ph;
      g_u2[i * c.k + q] *= ph;
    }
    for (long i = 0; i < c.v.dim(0); ++i) {
      c2.v[i * c.k + q] *= ph;
      g_v2[i * c.k + q] *= ph;
    }
  }
  DenseTensor g_a2 = svd_trunc_vjp(g_u2, g_s, g_v2, c2.a, c2.u, c2.s, c2.v, GradMode::exact(), 1e-12);
  CHECK(max_abs_diff(g_a, g_a2) < 1e-10 * std::max(1.0, g_a.max_abs()));
}

TEST_CASE("svd vjp rejects zero kept singular values when needed") {
  auto c = make_svd_case(4, 4, {2.0, 1.0, 0.0, 0.0}, 3, 3);
  auto gen = rng(5);
  DenseTensor g_u = random_tensor({4, 3}, gen), g_v = random_tensor({4, 3}, gen);
  std::vector<double> g_s(3, 0.0);
  CHECK_THROWS_AS(svd_trunc_vjp(g_u, g_s, g_v, c.a, c.u, c.s, c.v, GradMode::exact()),
                  NumericError);
}

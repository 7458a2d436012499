#pragma once

#include "ctm/linalg.hpp"
#include "ctm/tensor.hpp"

namespace ctm {

// Backward-rule variants for the truncated decompositions. "exact" solves the
// Sylvester equation for the discarded sector and needs no broadening;
// "lorentzian" is the prior-art rule with broadened energy denominators
// (full_dp additionally keeps the discarded-sector term in the dP equation);
// "dp_zero" keeps only the eigenvalue/singular-value response.
struct GradMode {
  enum class Kind { exact, lorentzian, dp_zero };
  enum class Broadening { paper_printed, regularized };

  Kind kind = Kind::exact;
  double epsilon = 0.0;
  Broadening form = Broadening::regularized;
  bool full_dp = false;

  static GradMode exact() { return GradMode{}; }
  static GradMode lorentzian(double eps, bool full = false,
                             Broadening f = Broadening::regularized) {
    GradMode m;
    m.kind = Kind::lorentzian;
    m.epsilon = eps;
    m.full_dp = full;
    m.form = f;
    return m;
  }
  static GradMode dp_zero() {
    GradMode m;
    m.kind = Kind::dp_zero;
    return m;
  }
  std::string name() const {
    switch (kind) {
      case Kind::exact: return "exact";
      case Kind::lorentzian: return full_dp ? "lorentzian_full_dp" : "lorentzian";
      case Kind::dp_zero: return "dp_zero";
    }
    return "?";
  }
  static GradMode parse(const std::string& name, double epsilon);
};

/// F_ij = 1/(s_j - s_i) with F_ii = 0 and the selected broadening of the
/// denominator; epsilon = 0 reproduces the exact formula (division by zero
/// yields Inf, intentionally not masked).
DenseTensor broadened_f(const std::vector<double>& s, double epsilon, GradMode::Broadening form);

/// Cotangent of the enlarged corner under M -> (P, C): given G_C (kept-block
/// cotangent, used in full) and G_P, returns G_M (Hermitian-symmetrized).
/// apply_m is the action of M on (dim x chi) matrices, vectorized row-major;
/// c_diag holds the kept eigenvalues of M (unnormalized).
DenseTensor eig_trunc_vjp(const DenseTensor& g_c, const DenseTensor& g_p, const LinearMap& apply_m,
                          const DenseTensor& p, const std::vector<double>& c_diag,
                          const GradMode& mode, double tol = 1e-10, long maxiter = 0);

/// Cotangent of a truncated SVD A = U S V^dagger (+ discarded part): maps
/// (G_U, G_S, G_V) to G_A. In exact mode the discarded-sector term comes from
/// the coupled Sylvester pair solved as one stacked system.
DenseTensor svd_trunc_vjp(const DenseTensor& g_u, const std::vector<double>& g_s,
                          const DenseTensor& g_v, const DenseTensor& a, const DenseTensor& u,
                          const std::vector<double>& s, const DenseTensor& v, const GradMode& mode,
                          double tol = 1e-10, long maxiter = 0);

}  // namespace ctm

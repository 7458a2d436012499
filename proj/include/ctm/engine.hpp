#pragma once

#include <optional>

#include "ctm/linalg.hpp"
#include "ctm/tensor.hpp"

namespace ctm {

/// Rank-5 site tensor (i; t, r, b, l) with C4V-symmetric virtual legs.
struct PepsTensor {
  DenseTensor a;
  long phys = 0;
  long bond = 0;
};
PepsTensor make_peps(DenseTensor t, double c4v_tol = 1e-12);

/// Double-layer tensor a_(t't)(r'r)(b'b)(l'l), composite legs bra-major
/// (index = bra * D + ket), each of dimension D^2.
struct DoubleTensor {
  DenseTensor a;
  long bond = 0;  // single-layer D
};
DoubleTensor build_double_tensor(const PepsTensor& peps);

/// CTM environment: corner spectrum c (real, |.| descending, max 1) and edge
/// tensor T (chi, D^2, chi) with T_{p,m,q} read along the boundary keeping
/// the bulk to the right.
struct Environment {
  std::vector<double> c;
  DenseTensor t;
  long chi() const { return static_cast<long>(c.size()); }
};

/// Truncated eigendecomposition of the enlarged corner.
struct TruncatedEig {
  DenseTensor p;               // (chi_in * D^2) x chi_eff isometry
  std::vector<double> s_kept;  // kept eigenvalues of M (unnormalized)
  std::vector<double> s_full;  // full spectrum, for diagnostics and multiplets
  long chi_eff = 0;
  bool multiplet_warning = false;
};

// conj + reverse chi legs + swap bra/ket on the middle composite leg
DenseTensor edge_swap_herm(const DenseTensor& t, long bond);
double edge_herm_residual(const DenseTensor& t, long bond);

struct EnlargedCorner {
  long dim = 0;
  LinearMap map;
  std::optional<DenseTensor> dense;
};
EnlargedCorner build_enlarged_corner(const Environment& env, const DoubleTensor& a,
                                     long dense_limit = 4096);

struct TruncationDecision {
  long chi_eff = 0;
  bool warned = false;
};
TruncationDecision truncate_spectrum(const std::vector<double>& s_full, long chi_target,
                                     double multiplet_tol);

struct CtmStep {
  Environment env;
  TruncatedEig eig;
};
CtmStep ctm_step(const Environment& env, const DoubleTensor& a, long chi_target,
                 double multiplet_tol = 1e-8);

struct CtmOptions {
  long chi = 8;
  double tol = 1e-10;
  long maxiter = 2000;
  double multiplet_tol = 1e-8;
  bool random_init = false;
  unsigned seed = 0;
  std::optional<Environment> warm_start;
};

struct CtmResult {
  Environment env;       // after the last step
  Environment env_prev;  // before the last step
  TruncatedEig eig;      // decomposition used by the last step
  long niter = 0;
  double spectrum_distance = 0.0;
};
CtmResult converge_ctm(const PepsTensor& peps, const CtmOptions& opts);
CtmResult converge_ctm(const DoubleTensor& a, const CtmOptions& opts);

Environment initial_environment(const DoubleTensor& a, const CtmOptions& opts);

/// Largest relative mismatch of the corner / edge renormalization identities
/// evaluated on (env, eig); a convergence diagnostic.
double renormalization_residual(const Environment& env, const TruncatedEig& eig,
                                const DoubleTensor& a);

}  // namespace ctm

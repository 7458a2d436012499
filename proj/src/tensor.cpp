#include "ctm/tensor.hpp"

#include "ctm/kernels.hpp"

namespace ctm {

DenseTensor DenseTensor::permuted(const std::vector<long>& axes) const {
  if (static_cast<long>(axes.size()) != rank()) throw ShapeError("permutation rank mismatch");
  std::vector<bool> seen(axes.size(), false);
  for (long a : axes) {
    if (a < 0 || a >= rank() || seen[static_cast<size_t>(a)]) throw ShapeError("invalid permutation");
    seen[static_cast<size_t>(a)] = true;
  }
  std::vector<long> newshape(axes.size());
  for (size_t i = 0; i < axes.size(); ++i) newshape[i] = shape_[static_cast<size_t>(axes[i])];
  DenseTensor out(newshape);
  if (size() > 0) kernels::permute(data(), out.data(), shape_, axes);
  return out;
}

DenseTensor DenseTensor::conjugate() const {
  DenseTensor out = *this;
  for (long i = 0; i < out.size(); ++i) out[i] = std::conj(out[i]);
  return out;
}

DenseTensor identity_matrix(long n) {
  DenseTensor m(std::vector<long>{n, n});
  for (long i = 0; i < n; ++i) m[i * n + i] = 1.0;
  return m;
}

DenseTensor matmul(const DenseTensor& a, const DenseTensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul expects rank-2 tensors");
  if (a.dim(1) != b.dim(0)) throw ShapeError("matmul inner dimension mismatch");
  DenseTensor c(std::vector<long>{a.dim(0), b.dim(1)});
  kernels::gemm(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
  return c;
}

DenseTensor dagger(const DenseTensor& a) {
  if (a.rank() != 2) throw ShapeError("dagger expects rank-2 tensor");
  DenseTensor out(std::vector<long>{a.dim(1), a.dim(0)});
  for (long i = 0; i < a.dim(0); ++i)
    for (long j = 0; j < a.dim(1); ++j) out[j * a.dim(0) + i] = std::conj(a[i * a.dim(1) + j]);
  return out;
}

DenseTensor transpose(const DenseTensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose expects rank-2 tensor");
  return a.permuted({1, 0});
}

cdouble hs_inner(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("hs_inner shape mismatch");
  cdouble s = 0.0;
  for (long i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("max_abs_diff shape mismatch");
  double m = 0.0;
  for (long i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace ctm

#pragma once

#include "ctm/tensor.hpp"

namespace ctm::kernels {

// Row-major complex GEMM, c = a(m x k) * b(k x n). The OpenMP variant
// parallelizes over output rows with a fixed k-accumulation order, so the
// result is bit-identical for any thread count.
void gemm(const cdouble* a, const cdouble* b, cdouble* c, long m, long k, long n);
void gemm_serial(const cdouble* a, const cdouble* b, cdouble* c, long m, long k, long n);

// out[j] = in[perm-mapped j]; axes[i] = source axis of output axis i.
void permute(const cdouble* in, cdouble* out, const std::vector<long>& in_shape,
             const std::vector<long>& axes);
void permute_serial(const cdouble* in, cdouble* out, const std::vector<long>& in_shape,
                    const std::vector<long>& axes);

}  // namespace ctm::kernels

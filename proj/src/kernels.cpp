#include "ctm/kernels.hpp"

#include <cstring>

namespace ctm::kernels {

void gemm_serial(const cdouble* a, const cdouble* b, cdouble* c, long m, long k, long n) {
  std::memset(reinterpret_cast<void*>(c), 0, sizeof(cdouble) * static_cast<size_t>(m * n));
  for (long i = 0; i < m; ++i) {
    cdouble* crow = c + i * n;
    const cdouble* arow = a + i * k;
    for (long p = 0; p < k; ++p) {
      const cdouble av = arow[p];
      if (av == cdouble(0.0, 0.0)) continue;
      const cdouble* brow = b + p * n;
      for (long j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm(const cdouble* a, const cdouble* b, cdouble* c, long m, long k, long n) {
  if (m * n * k < 32768) {
    gemm_serial(a, b, c, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (long i = 0; i < m; ++i) {
    cdouble* crow = c + i * n;
    for (long j = 0; j < n; ++j) crow[j] = cdouble(0.0, 0.0);
    const cdouble* arow = a + i * k;
    for (long p = 0; p < k; ++p) {
      const cdouble av = arow[p];
      if (av == cdouble(0.0, 0.0)) continue;
      const cdouble* brow = b + p * n;
      for (long j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

namespace {

void permute_impl(const cdouble* in, cdouble* out, const std::vector<long>& in_shape,
                  const std::vector<long>& axes, bool parallel) {
  const long r = static_cast<long>(in_shape.size());
  std::vector<long> out_shape(static_cast<size_t>(r));
  for (long i = 0; i < r; ++i) out_shape[static_cast<size_t>(i)] = in_shape[static_cast<size_t>(axes[static_cast<size_t>(i)])];
  const std::vector<long> in_st = row_major_strides(in_shape);
  long total = 1;
  for (long d : out_shape) total *= d;
  // stride of output axis i in the input layout
  std::vector<long> map_st(static_cast<size_t>(r));
  for (long i = 0; i < r; ++i) map_st[static_cast<size_t>(i)] = in_st[static_cast<size_t>(axes[static_cast<size_t>(i)])];

  auto body = [&](long lo, long hi) {
    std::vector<long> idx(static_cast<size_t>(r), 0);
    // seed multi-index at lo
    long rem = lo;
    for (long i = r - 1; i >= 0; --i) {
      idx[static_cast<size_t>(i)] = rem % out_shape[static_cast<size_t>(i)];
      rem /= out_shape[static_cast<size_t>(i)];
    }
    long src = 0;
    for (long i = 0; i < r; ++i) src += idx[static_cast<size_t>(i)] * map_st[static_cast<size_t>(i)];
    for (long o = lo; o < hi; ++o) {
      out[o] = in[src];
      // odometer increment
      for (long i = r - 1; i >= 0; --i) {
        idx[static_cast<size_t>(i)]++;
        src += map_st[static_cast<size_t>(i)];
        if (idx[static_cast<size_t>(i)] < out_shape[static_cast<size_t>(i)]) break;
        src -= map_st[static_cast<size_t>(i)] * out_shape[static_cast<size_t>(i)];
        idx[static_cast<size_t>(i)] = 0;
      }
    }
  };

  if (!parallel || total < 16384) {
    body(0, total);
    return;
  }
#pragma omp parallel
  {
#ifdef _OPENMP
    extern int omp_get_num_threads();
#endif
#pragma omp for schedule(static)
    for (long chunk = 0; chunk < 8; ++chunk) {
      long lo = total * chunk / 8;
      long hi = total * (chunk + 1) / 8;
      if (lo < hi) body(lo, hi);
    }
  }
}

}  // namespace

void permute(const cdouble* in, cdouble* out, const std::vector<long>& in_shape,
             const std::vector<long>& axes) {
  permute_impl(in, out, in_shape, axes, true);
}

void permute_serial(const cdouble* in, cdouble* out, const std::vector<long>& in_shape,
                    const std::vector<long>& axes) {
  permute_impl(in, out, in_shape, axes, false);
}

}  // namespace ctm::kernels

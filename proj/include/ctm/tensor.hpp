#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctm {

using cdouble = std::complex<double>;

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error("numeric error: " + msg) {}
};

struct ConvergenceError : NumericError {
  double residual;
  ConvergenceError(const std::string& msg, double res)
      : NumericError(msg + " (residual " + std::to_string(res) + ")"), residual(res) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

/// Dense complex tensor, row-major storage.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(std::vector<long> shape) : shape_(std::move(shape)) {
    long n = 1;
    for (long d : shape_) {
      if (d <= 0) throw ShapeError("nonpositive dimension " + std::to_string(d));
      n *= d;
    }
    data_.assign(static_cast<size_t>(n), cdouble(0.0, 0.0));
  }
  static DenseTensor scalar(cdouble v) {
    DenseTensor t(std::vector<long>{});
    t.data_.assign(1, v);
    return t;
  }

  const std::vector<long>& shape() const { return shape_; }
  long rank() const { return static_cast<long>(shape_.size()); }
  long size() const { return static_cast<long>(data_.size()); }
  long dim(long ax) const { return shape_.at(static_cast<size_t>(ax)); }

  cdouble* data() { return data_.data(); }
  const cdouble* data() const { return data_.data(); }
  cdouble& operator[](long i) { return data_[static_cast<size_t>(i)]; }
  const cdouble& operator[](long i) const { return data_[static_cast<size_t>(i)]; }

  cdouble& at(std::initializer_list<long> idx) { return data_[static_cast<size_t>(linear(idx))]; }
  const cdouble& at(std::initializer_list<long> idx) const {
    return data_[static_cast<size_t>(linear(idx))];
  }
  long linear(std::initializer_list<long> idx) const {
    if (static_cast<long>(idx.size()) != rank()) throw ShapeError("index rank mismatch");
    long lin = 0;
    long ax = 0;
    for (long i : idx) {
      if (i < 0 || i >= shape_[static_cast<size_t>(ax)]) throw ShapeError("index out of range");
      lin = lin * shape_[static_cast<size_t>(ax)] + i;
      ++ax;
    }
    return lin;
  }

  DenseTensor reshaped(std::vector<long> newshape) const {
    long n = 1;
    for (long d : newshape) n *= d;
    if (n != size()) throw ShapeError("reshape changes element count");
    DenseTensor out;
    out.shape_ = std::move(newshape);
    out.data_ = data_;
    return out;
  }

  DenseTensor permuted(const std::vector<long>& axes) const;
  DenseTensor conjugate() const;

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, std::abs(v));
    return m;
  }
  long arg_max_abs() const {
    double m = -1.0;
    long k = 0;
    for (long i = 0; i < size(); ++i) {
      double a = std::abs(data_[static_cast<size_t>(i)]);
      if (a > m) {
        m = a;
        k = i;
      }
    }
    return k;
  }
  double frobenius_norm() const {
    double s = 0.0;
    for (const auto& v : data_) s += std::norm(v);
    return std::sqrt(s);
  }
  bool all_finite() const {
    for (const auto& v : data_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  DenseTensor& operator+=(const DenseTensor& o) {
    check_same_shape(o);
    for (long i = 0; i < size(); ++i) data_[static_cast<size_t>(i)] += o[i];
    return *this;
  }
  DenseTensor& operator-=(const DenseTensor& o) {
    check_same_shape(o);
    for (long i = 0; i < size(); ++i) data_[static_cast<size_t>(i)] -= o[i];
    return *this;
  }
  DenseTensor& operator*=(cdouble c) {
    for (auto& v : data_) v *= c;
    return *this;
  }
  friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
  friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
  friend DenseTensor operator*(DenseTensor a, cdouble c) { return a *= c; }
  friend DenseTensor operator*(cdouble c, DenseTensor a) { return a *= c; }

 private:
  void check_same_shape(const DenseTensor& o) const {
    if (shape_ != o.shape_) throw ShapeError("tensor shapes differ");
  }
  std::vector<long> shape_;
  std::vector<cdouble> data_;
};

inline std::vector<long> row_major_strides(const std::vector<long>& shape) {
  std::vector<long> st(shape.size(), 1);
  for (long i = static_cast<long>(shape.size()) - 2; i >= 0; --i)
    st[static_cast<size_t>(i)] = st[static_cast<size_t>(i + 1)] * shape[static_cast<size_t>(i + 1)];
  return st;
}

// Rank-2 helpers. Matrices are row-major DenseTensors of rank 2.
DenseTensor identity_matrix(long n);
DenseTensor matmul(const DenseTensor& a, const DenseTensor& b);
DenseTensor dagger(const DenseTensor& a);
DenseTensor transpose(const DenseTensor& a);
/// Hilbert-Schmidt inner product sum_ij conj(a_ij) b_ij (any equal shape).
cdouble hs_inner(const DenseTensor& a, const DenseTensor& b);
double max_abs_diff(const DenseTensor& a, const DenseTensor& b);

}  // namespace ctm

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctm/io.hpp"
#include "ctm/kernels.hpp"
#include "ctm/tensor.hpp"
#include "support/random.hpp"

using namespace ctm;
using testsupport::random_tensor;

TEST_CASE("permute matches serial kernel and inverts") {
  auto gen = testsupport::rng(11);
  DenseTensor t = random_tensor({3, 4, 2, 5}, gen);
  DenseTensor p = t.permuted({2, 0, 3, 1});
  CHECK(p.shape() == std::vector<long>{2, 3, 5, 4});

  DenseTensor q(p.shape());
  kernels::permute_serial(t.data(), q.data(), t.shape(), {2, 0, 3, 1});
  CHECK(max_abs_diff(p, q) == 0.0);

  // inverse permutation restores the tensor
  DenseTensor back = p.permuted({1, 3, 0, 2});
  CHECK(max_abs_diff(back, t) == 0.0);
}

TEST_CASE("gemm agrees with serial reference") {
  auto gen = testsupport::rng(5);
  const long m = 37, k = 23, n = 41;
  DenseTensor a = random_tensor({m, k}, gen);
  DenseTensor b = random_tensor({k, n}, gen);
  DenseTensor c1(std::vector<long>{m, n}), c2(std::vector<long>{m, n});
  kernels::gemm(a.data(), b.data(), c1.data(), m, k, n);
  kernels::gemm_serial(a.data(), b.data(), c2.data(), m, k, n);
  CHECK(max_abs_diff(c1, c2) == 0.0);
}

TEST_CASE("matmul and dagger basics") {
  DenseTensor a(std::vector<long>{2, 2});
  a.at({0, 0}) = {1, 1};
  a.at({0, 1}) = {2, 0};
  a.at({1, 0}) = {0, -1};
  a.at({1, 1}) = {1, 0};
  DenseTensor id = identity_matrix(2);
  CHECK(max_abs_diff(matmul(a, id), a) == 0.0);
  DenseTensor ad = dagger(a);
  CHECK(ad.at({0, 0}) == cdouble(1, -1));
  CHECK(ad.at({1, 0}) == cdouble(2, 0));
}

TEST_CASE("reshape guards element count") {
  DenseTensor t(std::vector<long>{2, 3});
  CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
  CHECK(t.reshaped({3, 2}).shape() == std::vector<long>{3, 2});
}

TEST_CASE("TNT1 round trip keeps every bit") {
  auto gen = testsupport::rng(99);
  DenseTensor t = random_tensor({2, 3, 2}, gen);
  std::string path = "tnt1_roundtrip_test.tmp";
  write_tnt1(path, t);
  DenseTensor u = read_tnt1(path);
  REQUIRE(u.shape() == t.shape());
  CHECK(max_abs_diff(u, t) == 0.0);
  std::remove(path.c_str());
}

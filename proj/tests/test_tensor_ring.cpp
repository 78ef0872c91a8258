#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"
#include "tpca/tensor_ring.hpp"

using namespace tpca;
using tpca::test::naive_dft2;
using tpca::test::random_tensor;

namespace {

const TensorShape k22{2, 2};
const TensorShape k33{3, 3};

}  // namespace

TEST(TensorRing, AddIsEntrywise) {
  const auto x = TensorScalar::from_rows({{1, 2}, {3, 4}});
  const auto y = TensorScalar::from_rows({{5, 6}, {7, 8}});
  EXPECT_EQ(add(x, y), TensorScalar::from_rows({{6, 8}, {10, 12}}));
  EXPECT_EQ(add(x, zero_tensor<double>(k22)), x);
  EXPECT_EQ(add(x, scale(-1.0, x)), zero_tensor<double>(k22));
}

TEST(TensorRing, AddRejectsShapeMismatch) {
  EXPECT_THROW(add(TensorScalar(k22), TensorScalar(k33)), ShapeError);
  EXPECT_THROW(multiply(TensorScalar(k22), TensorScalar(k33)), ShapeError);
  EXPECT_THROW(multiply_fft(TensorScalar(k22), TensorScalar(k33)), ShapeError);
}

TEST(TensorRing, Scale) {
  const auto x = TensorScalar::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(scale(1.0, x), x);
  EXPECT_EQ(scale(0.0, x), zero_tensor<double>(k22));
  EXPECT_EQ(scale(2.0, x), TensorScalar::from_rows({{2, 4}, {6, 8}}));
}

TEST(TensorRing, RejectsNonFiniteEntries) {
  EXPECT_THROW(TensorScalar(k22, {1.0, 2.0, std::nan(""), 4.0}), NumericalError);
  EXPECT_THROW(TensorScalar(k22, {1.0, 2.0}), ShapeError);
  EXPECT_THROW(TensorScalar(TensorShape{0, 2}), ShapeError);
}

TEST(TensorRing, MultiplyByColumnShift) {
  // y is the impulse one column to the right: the product shifts x's columns.
  const auto x = TensorScalar::from_rows({{1, 2}, {3, 4}});
  const auto y = TensorScalar::from_rows({{0, 1}, {0, 0}});
  EXPECT_EQ(multiply(x, y), TensorScalar::from_rows({{2, 1}, {4, 3}}));
  EXPECT_LT(max_abs_diff(multiply_fft(x, y), TensorScalar::from_rows({{2, 1}, {4, 3}})), 1e-9);
}

TEST(TensorRing, IdentityAndZero) {
  EXPECT_EQ(identity_tensor(k22), TensorScalar::from_rows({{1, 0}, {0, 0}}));
  EXPECT_EQ(zero_tensor<double>(k33), TensorScalar(k33, std::vector<double>(9, 0.0)));
  EXPECT_EQ(multiply(identity_tensor(k33), identity_tensor(k33)), identity_tensor(k33));

  std::mt19937_64 rng(1);
  const auto x = random_tensor(rng, k33);
  EXPECT_EQ(multiply(x, identity_tensor(k33)), x);
  EXPECT_LT(max_abs_diff(multiply_fft(x, identity_tensor(k33)), x), 1e-12);
  EXPECT_EQ(multiply_fft(zero_tensor<double>(k33), x), zero_tensor<double>(k33));
}

TEST(TensorRing, MultiplyIsCommutative) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_tensor(rng, k33);
    const auto y = random_tensor(rng, k33);
    EXPECT_LT(max_abs_diff(multiply(x, y), multiply(y, x)), 1e-12);
    EXPECT_LT(max_abs_diff(multiply_fft(x, y), multiply(x, y)), 1e-9);
  }
}

TEST(TensorRing, UnitShapeIsTheField) {
  const TensorShape one{1, 1};
  const TensorScalar x(one, {3.25});
  const TensorScalar y(one, {-1.5});
  EXPECT_EQ(multiply(x, y)(0, 0), 3.25 * -1.5);
}

TEST(TensorRing, ConjugateIndexMap) {
  const TensorScalar col(TensorShape{3, 1}, {1, 2, 3});
  EXPECT_EQ(conjugate(col), TensorScalar(TensorShape{3, 1}, {1, 3, 2}));

  std::mt19937_64 rng(3);
  const auto x22 = random_tensor(rng, k22);
  EXPECT_EQ(conjugate(x22), x22);
  const auto x33 = random_tensor(rng, k33);
  EXPECT_EQ(conjugate(conjugate(x33)), x33);
}

TEST(TensorRing, ConjugateOfComplexEntriesAlsoConjugatesValues) {
  FourierScalar z(TensorShape{2, 1}, {cdouble(1, 2), cdouble(3, -4)});
  const FourierScalar c = conjugate(z);
  EXPECT_EQ(c(0, 0), cdouble(1, -2));
  EXPECT_EQ(c(1, 0), cdouble(3, 4));
}

TEST(TensorRing, Dft2KnownValues) {
  const FourierScalar f = dft2(TensorScalar::from_rows({{1, 1}, {1, 1}}));
  EXPECT_NEAR(std::abs(f(0, 0) - cdouble(4, 0)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(f(0, 1)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(f(1, 0)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(f(1, 1)), 0.0, 1e-14);

  const FourierScalar e = dft2(identity_tensor(k33));
  for (auto v : e.entries()) EXPECT_NEAR(std::abs(v - cdouble(1, 0)), 0.0, 1e-14);
}

TEST(TensorRing, Dft2MatchesTextbookSumOnOddAndEvenShapes) {
  std::mt19937_64 rng(4);
  for (TensorShape s : {TensorShape{1, 1}, TensorShape{2, 3}, TensorShape{3, 3}, TensorShape{4, 5}, TensorShape{5, 1}}) {
    const auto x = random_tensor(rng, s);
    EXPECT_LT(max_abs_diff(dft2(x), naive_dft2(x)), 1e-12) << s.str();
  }
}

TEST(TensorRing, Dft2RoundTrip) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto x = random_tensor(rng, k33);
    EXPECT_LT(max_abs_diff(idft2(dft2(x)), x), 1e-10);
  }
}

TEST(TensorRing, ConvolutionTheorem) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_tensor(rng, k33);
    const auto y = random_tensor(rng, k33);
    const FourierScalar lhs = naive_dft2(multiply(x, y));
    const FourierScalar fx = naive_dft2(x), fy = naive_dft2(y);
    for (std::size_t k = 0; k < 9; ++k) EXPECT_LT(std::abs(lhs.entries()[k] - fx.entries()[k] * fy.entries()[k]), 1e-9);
  }
}

TEST(TensorRing, ConjugateIsSpectralConjugate) {
  std::mt19937_64 rng(7);
  for (TensorShape s : {k22, k33, TensorShape{3, 4}}) {
    const auto x = random_tensor(rng, s);
    const FourierScalar a = dft2(conjugate(x));
    const FourierScalar b = dft2(x);
    for (std::size_t k = 0; k < s.size(); ++k) EXPECT_LT(std::abs(a.entries()[k] - std::conj(b.entries()[k])), 1e-10);
  }
}

TEST(TensorRing, RealSpectrumIsConjugateSymmetric) {
  std::mt19937_64 rng(8);
  const TensorShape s{3, 4};
  const FourierScalar f = dft2(random_tensor(rng, s));
  for (std::size_t w1 = 0; w1 < 3; ++w1)
    for (std::size_t w2 = 0; w2 < 4; ++w2) {
      auto [m1, m2] = mirror_frequency(s, w1, w2);
      EXPECT_LT(std::abs(f(w1, w2) - std::conj(f(m1, m2))), 1e-12);
    }
}

TEST(TensorRing, ImaginaryResiduePolicy) {
  int warnings = 0;
  auto saved = warning_handler();
  warning_handler() = [&](std::string_view) { ++warnings; };

  // Tiny residue: dropped silently.
  FourierScalar spec = dft2(TensorScalar::from_rows({{1, 2}, {3, 4}}));
  spec(0, 0) += cdouble(0, 1e-12);
  EXPECT_NO_THROW(idft2(spec));
  EXPECT_EQ(warnings, 0);

  // Mid residue: dropped with a warning.
  spec(0, 0) += cdouble(0, 4e-8);
  EXPECT_NO_THROW(idft2(spec));
  EXPECT_EQ(warnings, 1);

  // Large residue: symmetry bug.
  spec(0, 1) += cdouble(0, 1.0);
  EXPECT_THROW(idft2(spec), NumericalError);

  warning_handler() = saved;
}

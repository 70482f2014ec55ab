#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mergemix/param_core.hpp"

using namespace mergemix;

TEST(LinearCombine, IdentityCoefficient) {
  const ParameterVector base(2), v{1.0, 2.0};
  EXPECT_EQ(linear_combine(base, {{1.0, v}}), (ParameterVector{1.0, 2.0}));
}

TEST(LinearCombine, EmptySumReturnsBase) {
  const ParameterVector base{1.0, 1.0};
  EXPECT_EQ(linear_combine(base, {}), base);
}

TEST(LinearCombine, DirectArithmetic) {
  const ParameterVector base(2), a{1.0, 0.0}, b{0.0, 2.0};
  EXPECT_EQ(linear_combine(base, {{0.25, a}, {0.75, b}}), (ParameterVector{0.25, 1.5}));
}

TEST(LinearCombine, RejectsLengthMismatch) {
  const ParameterVector base(2), v{1.0, 2.0, 3.0};
  EXPECT_THROW(linear_combine(base, {{1.0, v}}), DimensionError);
}

TEST(LinearCombine, RejectsNonFiniteCoefficient) {
  const ParameterVector base(2), v{1.0, 2.0};
  EXPECT_THROW(linear_combine(base, {{std::numeric_limits<double>::infinity(), v}}), NumericError);
}

TEST(ParameterVector, RejectsNonFiniteEntries) {
  EXPECT_THROW(ParameterVector({1.0, std::nan("")}), NumericError);
  EXPECT_THROW(ParameterVector(3, std::numeric_limits<double>::infinity()), NumericError);
}

TEST(ParameterVector, ArithmeticAndNorms) {
  const ParameterVector a{3.0, 4.0}, b{1.0, 1.0};
  EXPECT_EQ(a + b, (ParameterVector{4.0, 5.0}));
  EXPECT_EQ(a - b, (ParameterVector{2.0, 3.0}));
  EXPECT_EQ(2.0 * b, (ParameterVector{2.0, 2.0}));
  EXPECT_DOUBLE_EQ(dot(a, b), 7.0);
  EXPECT_DOUBLE_EQ(norm2(a), 5.0);
  EXPECT_DOUBLE_EQ(norm_inf(a), 4.0);
  EXPECT_DOUBLE_EQ(distance_inf(a, b), 3.0);
}

TEST(Digest, DependsOnBitsOnly) {
  const ParameterVector a{0.1, 0.2}, b{0.1, 0.2}, c{0.1, 0.2000000000000001};
  EXPECT_EQ(digest(a), digest(b));
  EXPECT_NE(digest(a), digest(c));
  EXPECT_EQ(digest(a).size(), 16u);
}

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gcvae/numerics/tensor.hpp"

using gcvae::ShapeError;
using gcvae::Tensor;

TEST(Tensor, ValueCountMatchesShape) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_DOUBLE_EQ(t.at(1, 2), 1.5);
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5, 0.0)), ShapeError);
}

TEST(Tensor, RowVectorIsOneByN) {
  const Tensor r = Tensor::row({1, 2, 3});
  EXPECT_EQ(r.rows(), 1u);
  EXPECT_EQ(r.cols(), 3u);
  const Tensor s = Tensor::scalar(4.0);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s.rows(), 1u);
}

TEST(Tensor, IdentityAndZeros) {
  const Tensor i = Tensor::identity(3);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(i.at(r, c), r == c ? 1.0 : 0.0);
  const Tensor z = Tensor::zeros(2, 4);
  for (double v : z.values()) EXPECT_EQ(v, 0.0);
}

TEST(Tensor, HigherRankHasNoMatrixView) {
  Tensor t({2, 2, 2}, 0.0);
  EXPECT_EQ(t.size(), 8u);
  EXPECT_THROW(t.rows(), ShapeError);
}

TEST(Tensor, FiniteCheck) {
  Tensor t = Tensor::row({1.0, 2.0});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
  t[1] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(t.all_finite());
}

TEST(Tensor, EqualityComparesShapeAndValues) {
  EXPECT_EQ(Tensor::matrix(1, 2, {1, 2}), Tensor::row({1, 2}));
  EXPECT_NE(Tensor::matrix(2, 1, {1, 2}), Tensor::row({1, 2}));
  EXPECT_EQ(Tensor::matrix(2, 1, {1, 2}).shape_string(), "[2x1]");
}

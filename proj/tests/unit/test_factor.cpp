#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rulex/errors.hpp"
#include "rulex/psychostats.hpp"

using namespace rulex;
using namespace rulex::stats;

namespace {

Eigen::MatrixXd rotate(const Eigen::MatrixXd& loadings, double degrees) {
  const double t = degrees * M_PI / 180.0;
  Eigen::Matrix2d r;
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return loadings * r;
}

// Columns flipped so their largest-|loading| entry is positive, then ordered
// by the row holding that entry.
Eigen::MatrixXd canonical(Eigen::MatrixXd l) {
  std::vector<std::pair<Eigen::Index, Eigen::VectorXd>> cols;
  for (Eigen::Index j = 0; j < l.cols(); ++j) {
    Eigen::Index arg = 0;
    l.col(j).cwiseAbs().maxCoeff(&arg);
    Eigen::VectorXd c = l.col(j);
    if (c(arg) < 0) c = -c;
    cols.emplace_back(arg, c);
  }
  std::sort(cols.begin(), cols.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t j = 0; j < cols.size(); ++j) l.col(static_cast<Eigen::Index>(j)) = cols[j].second;
  return l;
}

Eigen::MatrixXd two_factor_data(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd d(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f1 = g(rng), f2 = g(rng);
    for (Eigen::Index j = 0; j < p; ++j) d(i, j) = (j % 2 ? f1 : f2) * 0.8 + g(rng);
  }
  return d;
}

}  // namespace

TEST(Pca, IdentityFallsBackToOneFactor) {
  const auto sol = pca_varimax(Eigen::MatrixXd::Identity(4, 4));
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(sol.eigenvalues(i), 1.0, 1e-12);
  EXPECT_EQ(sol.retained, 1u);
  ASSERT_EQ(sol.warnings.size(), 1u);
}

TEST(Pca, TwoByTwoClosedForm) {
  Eigen::Matrix2d r;
  r << 1, 0.6, 0.6, 1;
  const auto sol = pca_varimax(r);
  EXPECT_NEAR(sol.eigenvalues(0), 1.6, 1e-12);
  EXPECT_NEAR(sol.eigenvalues(1), 0.4, 1e-12);
  EXPECT_EQ(sol.retained, 1u);
  EXPECT_NEAR(sol.loadings(0, 0), std::sqrt(0.8), 1e-12);
  EXPECT_NEAR(sol.variance_percent[0], 80.0, 1e-10);
  EXPECT_TRUE(sol.warnings.empty());
}

TEST(Pca, EigenvaluesSumToItemCount) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index p = 3 + trial % 6;
    const auto sol = pca_varimax_data(two_factor_data(rng, 60, p));
    EXPECT_NEAR(sol.eigenvalues.sum(), static_cast<double>(p), 1e-9);
    for (Eigen::Index i = 1; i < p; ++i) EXPECT_GE(sol.eigenvalues(i - 1), sol.eigenvalues(i));
  }
}

TEST(Pca, RotationPreservesCommunalities) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sol = pca_varimax_data(two_factor_data(rng, 80, 8), RetentionRule::fixed(3));
    const Eigen::VectorXd before = sol.unrotated.rowwise().squaredNorm();
    EXPECT_LE((before - sol.communalities).cwiseAbs().maxCoeff(), 1e-8);
    // Orthogonal rotation: total explained variance is unchanged too.
    double pct = 0.0;
    for (double v : sol.variance_percent) pct += v;
    EXPECT_NEAR(pct, before.sum() / 8.0 * 100.0, 1e-8);
  }
}

TEST(Pca, InputErrors) {
  Eigen::Matrix3d bad;
  bad << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
  EXPECT_THROW(pca_varimax(bad), NumericError);
  Eigen::Matrix2d asym;
  asym << 1, 0.2, 0.3, 1;
  EXPECT_THROW(pca_varimax(asym), ValidationError);
  Eigen::Matrix2d diag;
  diag << 2, 0, 0, 1;
  EXPECT_THROW(pca_varimax(diag), ValidationError);
  EXPECT_THROW(pca_varimax(Eigen::MatrixXd::Identity(3, 3), RetentionRule::fixed(4)), ValidationError);
}

TEST(Varimax, MatchesGridSearchOracle) {
  Eigen::MatrixXd simple(4, 2);
  simple << 0.8, 0.0, 0.7, 0.0, 0.0, 0.8, 0.0, 0.6;
  for (double planted : {17.0, 30.0, 64.0}) {
    const Eigen::MatrixXd start = rotate(simple, planted);
    double best_angle = 0.0, best = -1.0;
    for (int deg = 0; deg < 180; ++deg) {
      const double v = varimax_criterion(rotate(start, deg));
      if (v > best) {
        best = v;
        best_angle = deg;
      }
    }
    const Eigen::MatrixXd oracle = canonical(rotate(start, best_angle));
    const Eigen::MatrixXd got = canonical(varimax(start));
    EXPECT_LE((got - oracle).cwiseAbs().maxCoeff(), 1e-3) << "planted " << planted;
    EXPECT_GE(varimax_criterion(got), best - 1e-12);
  }
}

TEST(Varimax, SingleFactorUnchanged) {
  Eigen::MatrixXd l(3, 1);
  l << 0.7, 0.5, 0.6;
  std::size_t sweeps = 99;
  EXPECT_EQ(varimax(l, 1e-10, 1000, &sweeps), l);
  EXPECT_EQ(sweeps, 0u);
  EXPECT_TRUE(salient_loading(-0.3));
  EXPECT_FALSE(salient_loading(0.29));
}

TEST(Correlation, MatrixFromData) {
  Eigen::MatrixXd d(4, 2);
  d << 1, 2, 2, 1, 3, 4, 4, 3;
  const auto r = correlation_matrix(d);
  EXPECT_NEAR(r(0, 1), 0.6, 1e-12);
  EXPECT_EQ(r(0, 0), 1.0);
  Eigen::MatrixXd c(4, 2);
  c << 1, 5, 2, 5, 3, 5, 4, 5;
  EXPECT_THROW(correlation_matrix(c), NumericError);
}

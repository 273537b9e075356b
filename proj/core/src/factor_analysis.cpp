#include <cmath>

#include "rulex/errors.hpp"
#include "rulex/psychostats.hpp"

namespace rulex::stats {
namespace {

double raw_criterion(const Eigen::MatrixXd& normalized) {
  const double p = static_cast<double>(normalized.rows());
  double v = 0.0;
  for (Eigen::Index j = 0; j < normalized.cols(); ++j) {
    const Eigen::ArrayXd sq = normalized.col(j).array().square();
    v += (p * sq.square().sum() - sq.sum() * sq.sum()) / (p * p);
  }
  return v;
}

Eigen::VectorXd row_norms(const Eigen::MatrixXd& loadings) { return loadings.rowwise().norm(); }

Eigen::MatrixXd kaiser_normalize(const Eigen::MatrixXd& loadings, const Eigen::VectorXd& h) {
  Eigen::MatrixXd a = loadings;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (h(i) > 0.0) a.row(i) /= h(i);
  }
  return a;
}

// Largest |loading| of each column made positive.
void orient_columns(Eigen::MatrixXd& loadings) {
  for (Eigen::Index j = 0; j < loadings.cols(); ++j) {
    Eigen::Index arg = 0;
    loadings.col(j).cwiseAbs().maxCoeff(&arg);
    if (loadings(arg, j) < 0.0) loadings.col(j) *= -1.0;
  }
}

}  // namespace

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data) {
  if (data.rows() < 3 || data.cols() < 2) throw ValidationError("correlation matrix needs >= 3 rows and >= 2 items");
  if (!data.allFinite()) throw ValidationError("data contains non-finite values");
  const Eigen::MatrixXd centred = data.rowwise() - data.colwise().mean();
  const Eigen::MatrixXd cov = centred.transpose() * centred;
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  if (sd.minCoeff() <= 0.0) throw NumericError("correlation matrix undefined: an item is constant");
  Eigen::MatrixXd r = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
  r.diagonal().setOnes();
  return r;
}

double varimax_criterion(const Eigen::MatrixXd& loadings) {
  return raw_criterion(kaiser_normalize(loadings, row_norms(loadings)));
}

Eigen::MatrixXd varimax(const Eigen::MatrixXd& loadings, double tolerance, std::size_t max_sweeps,
                        std::size_t* sweeps) {
  const Eigen::Index m = loadings.cols();
  const double p = static_cast<double>(loadings.rows());
  const Eigen::VectorXd h = row_norms(loadings);
  Eigen::MatrixXd a = kaiser_normalize(loadings, h);
  std::size_t done = 0;
  if (m >= 2) {
    double previous = raw_criterion(a);
    while (done < max_sweeps) {
      ++done;
      for (Eigen::Index j = 0; j < m - 1; ++j) {
        for (Eigen::Index k = j + 1; k < m; ++k) {
          const Eigen::ArrayXd x = a.col(j).array();
          const Eigen::ArrayXd y = a.col(k).array();
          const Eigen::ArrayXd u = x.square() - y.square();
          const Eigen::ArrayXd v = 2.0 * x * y;
          const double sa = u.sum();
          const double sb = v.sum();
          const double sc = (u.square() - v.square()).sum();
          const double sd = 2.0 * (u * v).sum();
          const double phi = 0.25 * std::atan2(sd - 2.0 * sa * sb / p, sc - (sa * sa - sb * sb) / p);
          const double c = std::cos(phi);
          const double s = std::sin(phi);
          a.col(j) = (c * x + s * y).matrix();
          a.col(k) = (-s * x + c * y).matrix();
        }
      }
      const double current = raw_criterion(a);
      const double gain = current - previous;
      previous = current;
      if (gain < tolerance) break;
    }
  }
  if (sweeps) *sweeps = done;
  return h.asDiagonal() * a;
}

FactorSolution pca_varimax(const Eigen::MatrixXd& correlation, RetentionRule rule) {
  const Eigen::Index p = correlation.rows();
  if (p < 2 || correlation.cols() != p) throw ValidationError("factor analysis needs a square matrix of >= 2 items");
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::abs(correlation(i, i) - 1.0) > 1e-9) throw ValidationError("correlation matrix needs a unit diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(correlation(i, j) - correlation(j, i)) > 1e-9) {
        throw ValidationError("correlation matrix must be symmetric");
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(correlation);
  if (eig.info() != Eigen::Success) throw NumericError("eigen-decomposition failed");
  if (eig.eigenvalues().minCoeff() < -1e-8) {
    throw NumericError("correlation matrix is not positive semi-definite (eigenvalue " +
                       std::to_string(eig.eigenvalues().minCoeff()) + ")");
  }

  FactorSolution sol;
  sol.eigenvalues = eig.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();

  if (rule.kind == RetentionRule::Kind::fixed) {
    if (rule.count < 1 || rule.count > static_cast<std::size_t>(p)) {
      throw ValidationError("fixed retention count must lie in [1, items]");
    }
    sol.retained = rule.count;
  } else {
    sol.retained = static_cast<std::size_t>((sol.eigenvalues.array() > 1.0).count());
    if (sol.retained == 0) {
      sol.retained = 1;
      sol.warnings.emplace_back("no eigenvalue exceeds 1; retaining one factor");
    }
  }
  const auto m = static_cast<Eigen::Index>(sol.retained);
  sol.unrotated = vectors.leftCols(m) * sol.eigenvalues.head(m).cwiseMax(0.0).cwiseSqrt().asDiagonal();
  orient_columns(sol.unrotated);
  sol.loadings = varimax(sol.unrotated, 1e-10, 1000, &sol.sweeps);
  orient_columns(sol.loadings);
  sol.communalities = sol.loadings.rowwise().squaredNorm();
  for (Eigen::Index j = 0; j < m; ++j) {
    sol.variance_percent.push_back(sol.loadings.col(j).squaredNorm() / static_cast<double>(p) * 100.0);
  }
  return sol;
}

FactorSolution pca_varimax_data(const Eigen::MatrixXd& data, RetentionRule rule) {
  return pca_varimax(correlation_matrix(data), rule);
}

}  // namespace rulex::stats

#pragma once

// Psychometric and group-comparison statistics: t tests, product-moment and
// partial correlation, Cronbach's alpha, Levene's test, one-way ANOVA,
// two-group MANOVA (Wilks' lambda), principal components with varimax
// rotation, and the incomplete-beta machinery behind every p-value.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rulex::stats {

// ---------------------------------------------------------------------------
// Distribution functions

/// Regularized incomplete beta I_x(a, b), continued fraction (modified
/// Lentz) with the symmetry switch at x > (a+1)/(a+b+2).
double reg_inc_beta(double x, double a, double b);
/// Two-tailed P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double p_value_t(double t, double df);
/// Upper tail P(F' >= f) for the F distribution with (d1, d2) degrees.
double p_value_f(double f, double d1, double d2);

// ---------------------------------------------------------------------------
// Descriptives and tests

double mean(std::span<const double> x);
/// Sample variance (n - 1 denominator).
double variance(std::span<const double> x);

enum class TTestMethod { pooled, welch };

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  TTestMethod method = TTestMethod::welch;
};

struct SampleSummary {
  double mean = 0.0;
  double sd = 0.0;
  double n = 0.0;
};

/// t = (mean_b - mean_a) / SE. Welch uses the Satterthwaite df.
TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestMethod method = TTestMethod::welch);
TTestResult t_test_from_summary(const SampleSummary& a, const SampleSummary& b,
                                TTestMethod method = TTestMethod::welch);

double pearson_r(std::span<const double> x, std::span<const double> y);
/// r_xy.z from the three pairwise coefficients.
double partial_r_from(double r_xy, double r_xz, double r_yz);
double partial_r(std::span<const double> x, std::span<const double> y, std::span<const double> z);
/// Two-tailed p for a (partial) correlation with df = n - 2 - controls.
double p_value_r(double r, double df);

/// k/(k-1) * (1 - sum item variances / total-score variance). `items` is
/// persons x items. May be negative.
double cronbach_alpha(const Eigen::MatrixXd& items);

struct ReliabilityResult {
  double alpha = 0.0;
  std::optional<double> retest;
};
/// Alpha of `items`; the test-retest correlation is filled in when both
/// administrations are given.
ReliabilityResult reliability(const Eigen::MatrixXd& items, std::span<const double> first = {},
                              std::span<const double> second = {});

struct LeveneResult {
  double w = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double p = 1.0;
};
/// Mean-centred Levene test for equal variances.
LeveneResult levene_w(std::span<const std::vector<double>> groups);

struct AnovaRow {
  double ss_hypothesis = 0.0;
  double ss_error = 0.0;
  double df_hypothesis = 0.0;
  double df_error = 0.0;
  double ms_hypothesis = 0.0;
  double ms_error = 0.0;
  double f = 0.0;
  double p = 1.0;
  double eta_squared = 0.0;
};

AnovaRow anova_oneway(std::span<const std::vector<double>> groups);
/// Completes a row from its sums of squares and degrees of freedom.
AnovaRow anova_from_sums(double ss_hypothesis, double df_hypothesis, double ss_error, double df_error);

struct ManovaResult {
  double wilks_lambda = 1.0;
  double f = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double p = 1.0;
  double eta_squared = 0.0;  // 1 - lambda
};

/// Two-group one-way MANOVA; each group is persons x variables.
ManovaResult manova_wilks(std::span<const Eigen::MatrixXd> groups);
/// eta^2 = 1 - lambda, the effect size of a two-group Wilks test.
inline double wilks_eta_squared(double wilks_lambda) { return 1.0 - wilks_lambda; }

// ---------------------------------------------------------------------------
// Factor analysis

struct RetentionRule {
  enum class Kind { kaiser, fixed };
  Kind kind = Kind::kaiser;  // kaiser: eigenvalue > 1
  std::size_t count = 0;     // used by Kind::fixed

  static RetentionRule kaiser_rule() { return {Kind::kaiser, 0}; }
  static RetentionRule fixed(std::size_t n) { return {Kind::fixed, n}; }
};

struct FactorSolution {
  std::size_t retained = 0;
  Eigen::MatrixXd unrotated;         // items x retained
  Eigen::MatrixXd loadings;          // varimax-rotated, items x retained
  Eigen::VectorXd eigenvalues;       // all, descending
  std::vector<double> variance_percent;  // rotated sum of squared loadings / items * 100
  Eigen::VectorXd communalities;
  std::size_t sweeps = 0;
  std::vector<std::string> warnings;
};

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data);

/// Raw varimax criterion of Kaiser-normalized loadings:
/// sum_j [p * sum_i l_ij^4 - (sum_i l_ij^2)^2] / p^2.
double varimax_criterion(const Eigen::MatrixXd& loadings);

/// Pairwise planar varimax rotation with Kaiser row normalization, sweeping
/// until the criterion gains less than `tolerance`.
Eigen::MatrixXd varimax(const Eigen::MatrixXd& loadings, double tolerance = 1e-10, std::size_t max_sweeps = 1000,
                        std::size_t* sweeps = nullptr);

FactorSolution pca_varimax(const Eigen::MatrixXd& correlation, RetentionRule rule = RetentionRule::kaiser_rule());
FactorSolution pca_varimax_data(const Eigen::MatrixXd& data, RetentionRule rule = RetentionRule::kaiser_rule());

/// |loading| >= threshold, for report tables.
inline bool salient_loading(double loading, double threshold = 0.3) { return std::abs(loading) >= threshold; }

}  // namespace rulex::stats

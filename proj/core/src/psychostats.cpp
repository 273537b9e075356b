#include "rulex/psychostats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rulex/errors.hpp"

namespace rulex::stats {
namespace {

void require_finite(std::span<const double> x, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError(std::string(what) + " contains a non-finite value");
  }
}

}  // namespace

double mean(std::span<const double> x) {
  if (x.empty()) throw ValidationError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw ValidationError("sample variance needs at least two values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestMethod method) {
  if (a.size() < 2 || b.size() < 2) throw ValidationError("t test needs at least two values per sample");
  require_finite(a, "t test sample");
  require_finite(b, "t test sample");
  return t_test_from_summary({mean(a), std::sqrt(variance(a)), static_cast<double>(a.size())},
                             {mean(b), std::sqrt(variance(b)), static_cast<double>(b.size())}, method);
}

TTestResult t_test_from_summary(const SampleSummary& a, const SampleSummary& b, TTestMethod method) {
  if (a.n < 2 || b.n < 2) throw ValidationError("t test needs n >= 2 per group");
  if (!(a.sd >= 0.0) || !(b.sd >= 0.0)) throw ValidationError("t test needs non-negative standard deviations");
  const double va = a.sd * a.sd / a.n;
  const double vb = b.sd * b.sd / b.n;
  TTestResult r;
  r.method = method;
  double se = 0.0;
  if (method == TTestMethod::pooled) {
    r.df = a.n + b.n - 2.0;
    const double pooled = ((a.n - 1.0) * a.sd * a.sd + (b.n - 1.0) * b.sd * b.sd) / r.df;
    se = std::sqrt(pooled * (1.0 / a.n + 1.0 / b.n));
  } else {
    se = std::sqrt(va + vb);
    const double denom = va * va / (a.n - 1.0) + vb * vb / (b.n - 1.0);
    r.df = denom > 0.0 ? (va + vb) * (va + vb) / denom : a.n + b.n - 2.0;
  }
  if (!(se > 0.0)) throw NumericError("t statistic undefined: both samples have zero variance");
  r.t = (b.mean - a.mean) / se;
  r.p = p_value_t(r.t, r.df);
  return r;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("correlation inputs differ in length");
  if (x.size() < 3) throw ValidationError("correlation needs at least three pairs");
  require_finite(x, "correlation input");
  require_finite(y, "correlation input");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw NumericError("correlation undefined for a constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double partial_r_from(double r_xy, double r_xz, double r_yz) {
  const double denom = (1.0 - r_xz * r_xz) * (1.0 - r_yz * r_yz);
  if (!(denom > 0.0)) throw NumericError("partial correlation undefined: control is perfectly correlated");
  return std::clamp((r_xy - r_xz * r_yz) / std::sqrt(denom), -1.0, 1.0);
}

double partial_r(std::span<const double> x, std::span<const double> y, std::span<const double> z) {
  return partial_r_from(pearson_r(x, y), pearson_r(x, z), pearson_r(y, z));
}

double p_value_r(double r, double df) {
  if (!(df > 0.0)) throw ValidationError("correlation test needs df > 0");
  if (std::abs(r) >= 1.0) return 0.0;
  return p_value_t(r * std::sqrt(df / (1.0 - r * r)), df);
}

double cronbach_alpha(const Eigen::MatrixXd& items) {
  const Eigen::Index persons = items.rows();
  const Eigen::Index k = items.cols();
  if (k < 2 || persons < 2) throw ValidationError("Cronbach's alpha needs at least two items and two persons");
  if (!items.allFinite()) throw ValidationError("Cronbach's alpha input contains non-finite values");
  auto var = [persons](const Eigen::VectorXd& v) {
    const double m = v.mean();
    return (v.array() - m).square().sum() / static_cast<double>(persons - 1);
  };
  double item_var = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) item_var += var(items.col(j));
  const double total_var = var(items.rowwise().sum());
  if (!(total_var > 0.0)) throw NumericError("Cronbach's alpha undefined: total score has zero variance");
  const double kd = static_cast<double>(k);
  return kd / (kd - 1.0) * (1.0 - item_var / total_var);
}

ReliabilityResult reliability(const Eigen::MatrixXd& items, std::span<const double> first,
                              std::span<const double> second) {
  ReliabilityResult r;
  r.alpha = cronbach_alpha(items);
  if (!first.empty() || !second.empty()) r.retest = pearson_r(first, second);
  return r;
}

LeveneResult levene_w(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw ValidationError("Levene's test needs at least two groups");
  std::vector<std::vector<double>> z(groups.size());
  std::vector<double> zbar(groups.size());
  double n_total = 0.0;
  double z_sum = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].size() < 2) throw ValidationError("Levene's test needs at least two values per group");
    require_finite(groups[g], "Levene input");
    const double m = mean(groups[g]);
    for (double v : groups[g]) z[g].push_back(std::abs(v - m));
    zbar[g] = mean(z[g]);
    n_total += static_cast<double>(groups[g].size());
    z_sum += std::accumulate(z[g].begin(), z[g].end(), 0.0);
  }
  const double grand = z_sum / n_total;
  const double k = static_cast<double>(groups.size());
  double between = 0.0;
  double within = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    between += static_cast<double>(z[g].size()) * (zbar[g] - grand) * (zbar[g] - grand);
    for (double v : z[g]) within += (v - zbar[g]) * (v - zbar[g]);
  }
  LeveneResult r;
  r.df1 = k - 1.0;
  r.df2 = n_total - k;
  constexpr double kZero = 1e-300;
  if (within <= kZero) {
    if (between <= kZero) return r;  // every deviation equal: W = 0, p = 1
    r.w = std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.w = (r.df2 / r.df1) * between / within;
  r.p = p_value_f(r.w, r.df1, r.df2);
  return r;
}

AnovaRow anova_from_sums(double ss_hypothesis, double df_hypothesis, double ss_error, double df_error) {
  if (!(df_hypothesis > 0.0) || !(df_error > 0.0)) throw ValidationError("ANOVA needs positive degrees of freedom");
  if (!(ss_hypothesis >= 0.0) || !(ss_error >= 0.0)) throw ValidationError("ANOVA sums of squares must be >= 0");
  if (!(ss_error > 0.0)) throw NumericError("ANOVA undefined: error sum of squares is zero");
  AnovaRow row;
  row.ss_hypothesis = ss_hypothesis;
  row.ss_error = ss_error;
  row.df_hypothesis = df_hypothesis;
  row.df_error = df_error;
  row.ms_hypothesis = ss_hypothesis / df_hypothesis;
  row.ms_error = ss_error / df_error;
  row.f = row.ms_hypothesis / row.ms_error;
  row.p = p_value_f(row.f, df_hypothesis, df_error);
  row.eta_squared = ss_hypothesis / (ss_hypothesis + ss_error);
  return row;
}

AnovaRow anova_oneway(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw ValidationError("ANOVA needs at least two groups");
  double n_total = 0.0;
  double sum_total = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw ValidationError("ANOVA needs at least two values per group");
    require_finite(g, "ANOVA input");
    n_total += static_cast<double>(g.size());
    sum_total += std::accumulate(g.begin(), g.end(), 0.0);
  }
  const double grand = sum_total / n_total;
  double ss_h = 0.0;
  double ss_e = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g);
    ss_h += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) ss_e += (v - m) * (v - m);
  }
  const double k = static_cast<double>(groups.size());
  return anova_from_sums(ss_h, k - 1.0, ss_e, n_total - k);
}

ManovaResult manova_wilks(std::span<const Eigen::MatrixXd> groups) {
  if (groups.size() != 2) throw ValidationError("exact-F MANOVA is implemented for two groups");
  const Eigen::Index p = groups[0].cols();
  if (p < 1 || groups[1].cols() != p) throw ValidationError("MANOVA groups must share the same variables");
  const double n_total = static_cast<double>(groups[0].rows() + groups[1].rows());
  if (!(n_total - 2.0 > static_cast<double>(p))) {
    throw ValidationError("MANOVA needs N - 2 > number of variables");
  }
  Eigen::VectorXd grand = Eigen::VectorXd::Zero(p);
  for (const auto& g : groups) {
    if (!g.allFinite()) throw ValidationError("MANOVA input contains non-finite values");
    grand += g.colwise().sum().transpose();
  }
  grand /= n_total;

  Eigen::MatrixXd error = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd hypothesis = Eigen::MatrixXd::Zero(p, p);
  for (const auto& g : groups) {
    const Eigen::VectorXd m = g.colwise().mean().transpose();
    const Eigen::MatrixXd centred = g.rowwise() - m.transpose();
    error += centred.transpose() * centred;
    const Eigen::VectorXd d = m - grand;
    hypothesis += static_cast<double>(g.rows()) * d * d.transpose();
  }

  Eigen::LLT<Eigen::MatrixXd> e_chol(error);
  const double scale = error.diagonal().maxCoeff();
  const bool singular = e_chol.info() != Eigen::Success || !(scale > 0.0) ||
                        e_chol.matrixL().toDenseMatrix().diagonal().minCoeff() <= 1e-10 * std::sqrt(scale);
  if (singular) {
    throw NumericError("within-group scatter matrix is singular; remove collinear or constant variables");
  }
  Eigen::LLT<Eigen::MatrixXd> t_chol(error + hypothesis);
  auto log_det = [](const Eigen::LLT<Eigen::MatrixXd>& c) {
    return 2.0 * c.matrixL().toDenseMatrix().diagonal().array().log().sum();
  };

  ManovaResult r;
  r.wilks_lambda = std::clamp(std::exp(log_det(e_chol) - log_det(t_chol)), 0.0, 1.0);
  const double pd = static_cast<double>(p);
  r.df1 = pd;
  r.df2 = n_total - pd - 1.0;
  r.f = r.wilks_lambda > 0.0 ? (r.df2 / pd) * (1.0 - r.wilks_lambda) / r.wilks_lambda
                             : std::numeric_limits<double>::infinity();
  r.p = p_value_f(r.f, r.df1, r.df2);
  r.eta_squared = wilks_eta_squared(r.wilks_lambda);
  return r;
}

}  // namespace rulex::stats

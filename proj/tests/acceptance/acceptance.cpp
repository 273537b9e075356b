// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rulex/errors.hpp"
#include "rulex/pipeline.hpp"
#include "rulex/psychostats.hpp"
#include "rulex/synthgen.hpp"

using namespace rulex;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rulex_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

// Published gender summary for reasoning: t "3.99", significant at 0.01.
Outcome published_t_test() {
  const auto r = stats::t_test_from_summary({11.84, 2.86, 49}, {13.73, 1.67, 48}, stats::TTestMethod::welch);
  return {std::abs(r.t - 3.99) <= 0.05 && r.p < 0.01, fmt("welch t = %.3f, p = %.2g", r.t, r.p)};
}

// Published learning-skills univariate rows: SS_h, SS_e (df 1, 95), printed F and eta.
Outcome published_anova_rows() {
  struct Row {
    const char* name;
    double ss_h, ss_e, f, eta;
  };
  const Row rows[] = {
      {"Management of dispersants", 18.05, 1177.3, 1.46, 0.02},
      {"Management of the study time", 114.19, 669.36, 16.2, 0.15},
      {"Summing and taking notes", 106.23, 436.02, 23.2, 0.2},
      {"Preparing for examinations", 20.77, 199.30, 9.88, 0.1},
      {"Organization of information", 43.08, 317.29, 12.9, 0.12},
      {"Continuation of study", 36.03, 325.72, 10.5, 0.10},
      {"The use of computer & Internet", 177.97, 1088.9, 15.5, 0.14},
      {"Total", 3102.3, 12041.8, 24.5, 0.21},
  };
  int ok = 0;
  double worst_f = 0.0, worst_eta = 0.0;
  for (const auto& r : rows) {
    const auto a = stats::anova_from_sums(r.ss_h, 1, r.ss_e, 95);
    worst_f = std::max(worst_f, std::abs(a.f - r.f));
    worst_eta = std::max(worst_eta, std::abs(a.eta_squared - r.eta));
    ok += std::abs(a.f - r.f) <= 0.1 && std::abs(a.eta_squared - r.eta) <= 0.01;
  }
  return {ok == 8, fmt("%.0f/8 rows, max |dF| = %.3f, max |d eta| = %.4f", ok, worst_f, worst_eta)};
}

Outcome wilks_identity() {
  bool ok = true;
  for (auto [lambda, eta] : {std::pair{0.68, 0.32}, {0.56, 0.44}, {0.82, 0.18}}) {
    ok &= std::abs(stats::wilks_eta_squared(lambda) - eta) <= 0.005;
  }
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  int exact = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Eigen::MatrixXd> groups(2, Eigen::MatrixXd(30, 4));
    for (std::size_t k = 0; k < 2; ++k) {
      for (Eigen::Index i = 0; i < 30; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) groups[k](i, j) = g(rng) + 0.4 * static_cast<double>(k * j);
      }
    }
    const auto m = stats::manova_wilks(groups);
    exact += m.eta_squared == 1.0 - m.wilks_lambda;
  }
  ok &= exact == 50;
  return {ok, fmt("published pairs within 0.005; exact identity on %.0f/50 synthetic draws", exact)};
}

// 4 attributes x 3 levels = 12 bits; the class score is maximized by GA and
// by enumerating all 4096 chromosomes.
Outcome ga_optimality() {
  const std::vector<std::string> lv = {"x", "y", "z"};
  const AttributeSchema schema({{"A", lv, Role::predictive},
                                {"B", lv, Role::predictive},
                                {"C", lv, Role::predictive},
                                {"D", lv, Role::predictive},
                                {"T", {"t1", "t2"}, Role::target}});
  std::vector<StudentRecord> data;
  for (std::size_t code = 0; code < 81; ++code) {
    StudentRecord r;
    std::size_t rest = code;
    for (int a = 0; a < 4; ++a, rest /= 3) r.levels.push_back(rest % 3);
    r.levels.push_back((r.levels[0] == 0 || r.levels[1] == 2) ? 0 : 1);
    data.push_back(r);
  }
  TrainConfig tc;
  const Network net = train(init_network(schema, tc), encode_records(data, schema), tc).network;

  double exhaustive = -1.0;
  Bits chrom(12);
  for (std::size_t code = 0; code < 4096; ++code) {
    for (std::size_t b = 0; b < 12; ++b) chrom[b] = (code >> b) & 1u;
    exhaustive = std::max(exhaustive, class_score(net, chrom, 0));
  }
  const auto start = std::chrono::steady_clock::now();
  int hits = 0;
  bool exceeded = false;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    GaConfig ga;
    ga.seed = seed;
    const auto r = evolve([&](std::span<const std::uint8_t> bits) { return class_score(net, bits, 0); }, 12, ga);
    hits += r.best_fitness == exhaustive;
    exceeded |= r.best_fitness > exhaustive;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {hits >= 95 && !exceeded && secs < 60.0, fmt("%.0f/100 runs hit the exhaustive maximum in %.2f s", hits, secs)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double eps = 1e-4;
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    Network n = Network::zeros(6, 3, 2);
    auto params = [](Network& w) {
      return std::vector<std::vector<double>*>{&w.input_weights, &w.hidden_bias, &w.output_weights, &w.output_bias};
    };
    for (auto* v : params(n)) {
      for (double& w : *v) w = u(rng);
    }
    std::vector<double> x(6);
    for (double& v : x) v = 0.5 * (u(rng) + 1.0);
    const std::vector<double> t = {draw % 2 ? 1.0 : 0.0, draw % 2 ? 0.0 : 1.0};
    Network grad = pattern_gradient(n, x, t);
    auto np = params(n);
    auto gp = params(grad);
    for (std::size_t p = 0; p < np.size(); ++p) {
      for (std::size_t i = 0; i < np[p]->size(); ++i) {
        const double keep = (*np[p])[i];
        (*np[p])[i] = keep + eps;
        const double up = pattern_loss(n, x, t);
        (*np[p])[i] = keep - eps;
        const double down = pattern_loss(n, x, t);
        (*np[p])[i] = keep;
        const double numeric = (up - down) / (2.0 * eps);
        const double analytic = (*gp[p])[i];
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        worst = std::max(worst, std::abs(analytic - numeric) / scale);
      }
    }
  }
  return {worst < 1e-5, fmt("max relative error %.2e over 20 draws", worst)};
}

Outcome planted_recovery() {
  const fs::path dir = scratch("planted");
  RunConfig c;
  c.out_dir = dir;
  c.n = 2000;
  c.planted = true;
  c.seed = 11;
  cmd_generate(c);
  cmd_train(c);
  cmd_extract(c);
  const auto& schema = default_student_schema();
  const Dataset data = parse_dataset_csv(read_text_file(dir / artifact::kCohort), schema);
  const RuleSet set = ruleset_from_json(parse_json_file(dir / artifact::kRuleset), schema);
  const double acc = set.accuracy(data.records, schema);
  const std::set<std::size_t> allowed = {schema.index_of("Unit 1"), schema.index_of("Unit 2")};
  bool only_units = true;
  for (const Rule& r : set.rules) {
    for (const Term& t : r.terms) only_units &= allowed.count(t.attribute) == 1;
  }
  return {acc >= 0.98 && only_units,
          fmt("%.0f rules, accuracy %.4f, ", static_cast<double>(set.rules.size()), acc) +
              (only_units ? "only Unit 1/Unit 2 referenced" : "other attributes referenced")};
}

Outcome statistical_oracles() {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  double partial_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 6 + trial % 30;
    std::vector<double> x(n), y(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = g(rng);
      x[i] = 0.5 * z[i] + g(rng);
      y[i] = 0.3 * x[i] - 0.6 * z[i] + g(rng);
    }
    // Residuals of x and y after regression on z.
    auto resid = [&](const std::vector<double>& v) {
      double mv = 0, mz = 0;
      for (std::size_t i = 0; i < n; ++i) mv += v[i], mz += z[i];
      mv /= static_cast<double>(n);
      mz /= static_cast<double>(n);
      double szz = 0, szv = 0;
      for (std::size_t i = 0; i < n; ++i) szz += (z[i] - mz) * (z[i] - mz), szv += (z[i] - mz) * (v[i] - mv);
      std::vector<double> r(n);
      for (std::size_t i = 0; i < n; ++i) r[i] = v[i] - mv - szv / szz * (z[i] - mz);
      return r;
    };
    partial_err = std::max(partial_err, std::abs(stats::partial_r(x, y, z) - stats::pearson_r(resid(x), resid(y))));
  }

  double manova_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(20), b(25);
    for (double& v : a) v = g(rng);
    for (double& v : b) v = 0.3 + g(rng);
    const std::vector<Eigen::MatrixXd> groups = {Eigen::Map<Eigen::VectorXd>(a.data(), 20),
                                                 Eigen::Map<Eigen::VectorXd>(b.data(), 25)};
    const double fm = stats::manova_wilks(groups).f;
    const double fa = stats::anova_oneway(std::vector<std::vector<double>>{a, b}).f;
    manova_err = std::max(manova_err, std::abs(fm - fa) / std::max(1.0, std::abs(fa)));
  }

  double drift = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd d(100, 6);
    for (Eigen::Index i = 0; i < 100; ++i) {
      const double f1 = g(rng), f2 = g(rng);
      for (Eigen::Index j = 0; j < 6; ++j) d(i, j) = (j < 3 ? f1 : f2) + g(rng);
    }
    const auto sol = stats::pca_varimax_data(d, stats::RetentionRule::fixed(2));
    drift = std::max(drift, (sol.unrotated.rowwise().squaredNorm() - sol.communalities).cwiseAbs().maxCoeff());
  }

  double beta_err = 0.0;
  for (double x : {0.0, 0.1, 0.3, 0.5, 0.77, 1.0}) beta_err = std::max(beta_err, std::abs(stats::reg_inc_beta(x, 1, 1) - x));

  const bool ok = partial_err <= 1e-10 && manova_err <= 1e-9 && drift <= 1e-8 && beta_err <= 1e-12;
  char buf[256];
  std::snprintf(buf, sizeof buf, "partial %.1e, manova %.1e, communality %.1e, I_x(1,1) %.1e", partial_err,
                manova_err, drift, beta_err);
  return {ok, buf};
}

// Sample means within 3 SE and sample correlations within 0.05 of the
// correlation actually planted (after repair).
Outcome synthetic_fidelity() {
  const PopulationSpec spec = default_population_spec(10000, 10000, 8);
  const auto samples = sample_population(spec);
  int mean_fail = 0, corr_fail = 0, checks = 0;
  double worst_z = 0.0, worst_r = 0.0;
  for (std::size_t g = 0; g < samples.size(); ++g) {
    const GroupSpec& gs = spec.groups[g];
    const Eigen::MatrixXd& x = samples[g].scores;
    const double n = static_cast<double>(x.rows());
    const Eigen::RowVectorXd m = x.colwise().mean();
    const Eigen::MatrixXd centred = x.rowwise() - m;
    const Eigen::MatrixXd cov = centred.transpose() * centred / (n - 1.0);
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
      ++checks;
      if (gs.sd(d) == 0.0) {
        mean_fail += m(d) != gs.mean(d);
        continue;
      }
      const double z = std::abs(m(d) - gs.mean(d)) / (gs.sd(d) / std::sqrt(n));
      worst_z = std::max(worst_z, z);
      mean_fail += z > 3.0;
      for (Eigen::Index e = 0; e < d; ++e) {
        if (gs.sd(e) == 0.0) continue;
        const double r = cov(d, e) / (sd(d) * sd(e));
        const double dr = std::abs(r - samples[g].effective_correlation(d, e));
        worst_r = std::max(worst_r, dr);
        corr_fail += dr > 0.05;
      }
    }
  }
  return {mean_fail == 0 && corr_fail == 0,
          fmt("%.0f means, worst |z| = %.2f; worst correlation gap %.4f", checks, worst_z, worst_r)};
}

Outcome determinism() {
  std::vector<fs::path> dirs = {scratch("det_a"), scratch("det_b")};
  for (const auto& d : dirs) {
    RunConfig c;
    c.out_dir = d;
    c.seed = 2024;
    cmd_generate(c);
    cmd_train(c);
    cmd_extract(c);
    cmd_stats(c);
    cmd_report(c);
  }
  int same = 0;
  const std::string_view names[] = {artifact::kCohort, artifact::kModel, artifact::kRuleset, artifact::kReport};
  for (auto name : names) same += read_text_file(dirs[0] / name) == read_text_file(dirs[1] / name);
  return {same == 4, fmt("%.0f/4 artifacts byte-identical (cohort, model, ruleset, report)", same)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"published t test reproduced", published_t_test},
      {"published univariate rows reproduced", published_anova_rows},
      {"Wilks eta identity", wilks_identity},
      {"GA reaches the exhaustive optimum", ga_optimality},
      {"backprop gradient check", gradient_check},
      {"planted-rule recovery", planted_recovery},
      {"statistical oracles", statistical_oracles},
      {"synthetic fidelity", synthetic_fidelity},
      {"pipeline determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %zu: %s (%s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

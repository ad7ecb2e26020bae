// Acceptance suite: one PASS/FAIL line per criterion.
//
//   rhoindex_acceptance            run everything
//   rhoindex_acceptance NAME ...   run selected criteria
//   rhoindex_acceptance --list     print criterion names

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gradient_check.hpp"
#include "oracles.hpp"

#include "rhoindex/dimension_study.hpp"
#include "rhoindex/divergence.hpp"
#include "rhoindex/estimator.hpp"
#include "rhoindex/numeric.hpp"
#include "rhoindex/probe.hpp"
#include "rhoindex/sweep.hpp"

using namespace rhoindex;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* name;
  double time_limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- estimator -------------------------------------------------------------

Outcome constants() {
  const double g = gaussian_self_constant();
  const double m0 = mixed_expectation(0.0);
  const double eg = std::fabs(g - 1.1283791671), em = std::fabs(m0 - 0.7978845608);
  return {eg < 1e-10 && em < 1e-10, fmt("2/sqrt(pi)=%.12f (err %.1e), E|G|=%.12f (err %.1e)", g, eg, m0, em)};
}

Outcome mixed_expectation_mc() {
  constexpr std::size_t kPoints = 10'000, kDraws = 1'000'000, kPerBlock = 100;
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> uniform(-6.0, 6.0);
  std::normal_distribution<double> normal;
  std::vector<double> g(kDraws), prefix(kDraws + 1);

  std::size_t within = 0;
  double worst = 0.0;
  for (std::size_t block = 0; block < kPoints / kPerBlock; ++block) {
    for (double& v : g) v = normal(rng);
    std::sort(g.begin(), g.end());
    long double s = 0.0L, s2 = 0.0L;
    prefix[0] = 0.0;
    for (std::size_t i = 0; i < kDraws; ++i) {
      s += g[i];
      s2 += static_cast<long double>(g[i]) * g[i];
      prefix[i + 1] = static_cast<double>(s);
    }
    const long double total = s;
    for (std::size_t k = 0; k < kPerBlock; ++k) {
      const double x = uniform(rng);
      const std::size_t below = static_cast<std::size_t>(std::lower_bound(g.begin(), g.end(), x) - g.begin());
      const long double lo = prefix[below], hi = total - lo;
      const long double n = kDraws;
      // sum |x - g| split at x: (x*below - lo) + (hi - x*(n - below)).
      const long double sum_abs = x * static_cast<long double>(below) - lo + hi - x * (n - below);
      const long double mean = sum_abs / n;
      const long double second = (n * x * x - 2.0L * x * total + s2) / n;
      const double se = static_cast<double>(std::sqrt((second - mean * mean) / (n - 1.0L)));
      const double z = std::fabs(static_cast<double>(mean) - mixed_expectation(x)) / se;
      worst = std::max(worst, z);
      if (z <= 4.0) ++within;
    }
  }
  const double share = static_cast<double>(within) / kPoints;
  return {share >= 0.99, fmt("%.2f%% of %zu points within 4 SE (worst %.2f SE)", 100.0 * share, kPoints, worst)};
}

Outcome u_statistic() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> size(2, 512);
  std::normal_distribution<double> normal;
  std::student_t_distribution<double> heavy(1.5);
  std::uniform_int_distribution<int> coarse(-3, 3);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> z(size(rng));
    for (double& v : z) {
      switch (rep % 3) {
        case 0: v = normal(rng); break;
        case 1: v = heavy(rng); break;
        default: v = coarse(rng); break;  // many ties
      }
    }
    const double fast = empirical_self_term(z), slow = oracle::self_term_pairwise(z);
    const double rel = slow == 0.0 ? std::fabs(fast) : std::fabs(fast - slow) / slow;
    worst = std::max(worst, rel);
  }
  return {worst < 1e-9, fmt("worst relative error %.2e over 1000 samples", worst)};
}

Outcome null_calibration() {
  std::size_t ok = 0;
  double worst = 0.0;
  std::vector<double> z(100'000);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Engine engine = make_engine(derive_seed(seed, {0x6e756c6c}));
    std::normal_distribution<double> normal;
    for (double& v : z) v = normal(engine);
    const double r = energy_distance(z).rho_hat;
    worst = std::max(worst, std::fabs(r));
    if (std::fabs(r) < 0.01) ++ok;
  }
  return {ok >= 95, fmt("%zu/100 seeds with |rho_hat| < 0.01 (max |rho_hat| %.2e)", ok, worst)};
}

// --- dimension study -------------------------------------------------------

Outcome dimension_decay() {
  DimScanConfig config;
  config.trials = 500;
  const std::vector<DimScanSummary> summary = summarize_dimscan(run_dimscan(config));
  const MonotoneCheck mono = check_std_nonincreasing(summary);
  const double slope = log_log_slope(summary);
  const bool monotone = mono.violations == 0 || (mono.violations == 1 && mono.worst_relative_increase <= 0.05);
  const bool slope_ok = std::fabs(slope + 0.5) <= 0.15;
  const DimScanSummary& lo = summary.front();
  const DimScanSummary& hi = summary.back();
  return {monotone && slope_ok,
          fmt("std non-increasing: %s (%zu violations); log-log slope %.3f (target -0.5 +/- 0.15): %s; "
              "std n=16 %.2e vs n=192 %.2e; mean n=16 %.2e vs n=192 %.2e",
              monotone ? "yes" : "no", mono.violations, slope, slope_ok ? "ok" : "out of band", lo.stddev, hi.stddev,
              lo.mean, hi.mean)};
}

// --- divergence suite ------------------------------------------------------

Outcome divergence_ordering() {
  std::size_t gauss_min = 0, gauss_near_zero = 0, exp_max = 0, heavy_tail = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::vector<DivergenceReport> rows = divergence_table(100'000, seed);
    const auto by_ed = [](const DivergenceReport& a, const DivergenceReport& b) {
      return a.energy_distance < b.energy_distance;
    };
    const auto lowest = std::min_element(rows.begin(), rows.end(), by_ed);
    const auto highest = std::max_element(rows.begin(), rows.end(), by_ed);
    const auto row = [&](DistributionKind k) {
      return *std::find_if(rows.begin(), rows.end(), [k](const DivergenceReport& r) { return r.distribution == k; });
    };
    if (lowest->distribution == DistributionKind::Gaussian) ++gauss_min;
    if (std::fabs(row(DistributionKind::Gaussian).energy_distance) <= 0.005) ++gauss_near_zero;
    if (highest->distribution == DistributionKind::SkewedExpMinus1) ++exp_max;
    if (row(DistributionKind::StudentT3).mardia_excess2 >= 100.0 * row(DistributionKind::LaplaceUnitVar).mardia_excess2)
      ++heavy_tail;
  }
  const bool pass = gauss_min >= 9 && gauss_near_zero >= 9 && exp_max >= 9 && heavy_tail >= 9;
  return {pass, fmt("seeds/10: Gaussian min ED %zu, |ED_gauss| <= 0.005 %zu, Exp-1 max ED %zu, "
                    "t3 excess2 >= 100x Laplace %zu",
                    gauss_min, gauss_near_zero, exp_max, heavy_tail)};
}

Outcome wasserstein_scale() {
  constexpr std::size_t n = 100'000;
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = normal_quantile((static_cast<double>(i) + 0.5) / n);
  bool pass = true;
  std::string detail;
  for (double sigma : {0.5, 2.0}) {
    std::vector<double> x = q;
    for (double& v : x) v *= sigma;
    const double w = wasserstein2_to_normal(x);
    const double rel = std::fabs(w - std::fabs(sigma - 1.0)) / std::fabs(sigma - 1.0);
    pass = pass && rel <= 0.02;
    detail += fmt("sigma=%.1f W2=%.5f (rel dev %.2e) ", sigma, w, rel);
  }
  return {pass, detail};
}

// --- coupling probe --------------------------------------------------------

Outcome gradient_check() {
  double worst = 0.0;
  std::string where;
  for (Task task : {Task::Classify, Task::Autoencode}) {
    for (CouplingMode mode : {CouplingMode::InBetween, CouplingMode::Auxiliary}) {
      for (Activation act : {Activation::Tanh, Activation::Logistic}) {
        const ProbeConfig c = gradcheck::tiny_config(task, mode, act, 0.01);
        for (const gradcheck::TensorError& e : gradcheck::check(c, 5)) {
          if (e.relative_error > worst) {
            worst = e.relative_error;
            where = std::string(to_string(task)) + "/" + std::string(to_string(mode)) + "/" +
                    std::string(to_string(act)) + "/" + e.name;
          }
        }
      }
    }
  }
  return {worst < 1e-4, fmt("worst relative error %.2e (%s) over 8 configurations", worst, where.c_str())};
}

Outcome probe_smoke() {
  const Dataset data = make_blobs(8, 2, 256, 2.0, 0);
  ProbeConfig c;
  c.input_dim = 8;
  c.hidden_dims = {96};
  c.output_dim = 2;
  c.epochs = 100;
  c.keep_snapshots = true;
  const TrainingTrace t = train(c, data);
  const double train_acc = evaluate(t.network, c, data.train_x, data.train_labels);
  double worst = 0.0;
  for (std::size_t e = 0; e < t.epochs.size(); ++e) {
    const double again = rho_from_weights(t.snapshots[e][0]).rho_hat;
    worst = std::max(worst, std::fabs(again - t.epochs[e].layers[0].rho_weight));
  }
  const bool pass = train_acc >= 0.95 && worst <= 1e-12 && t.epochs.size() == 101;
  return {pass, fmt("train accuracy %.4f, eval accuracy %.4f, max rho_weight recomputation gap %.1e over %zu epochs",
                    train_acc, t.epochs.back().metric, worst, t.epochs.size())};
}

Outcome sweep_direction() {
  // Small, overlapping blobs: accuracy varies across the sweep and long runs
  // can overfit.
  const Dataset data = make_blobs(8, 4, 32, 0.6, 2024);
  ProbeConfig base;
  base.input_dim = 8;
  base.output_dim = 4;
  const SweepSpace space = default_sweep_space();
  std::size_t nonpositive = 0;
  std::string rhos;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::vector<SweepRow> rows = sweep(space, base, data, 32, seed);
    std::vector<double> rho, acc;
    for (const SweepRow& r : rows) {
      rho.push_back(r.rho_mean);
      acc.push_back(r.metric);
    }
    const double s = spearman(rho, acc);
    if (s <= 0.0) ++nonpositive;
    rhos += fmt("%+.2f ", s);
  }
  return {nonpositive >= 8, fmt("Spearman <= 0 in %zu/10 sweep seeds: %s", nonpositive, rhos.c_str())};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {"constants", 1, constants},
      {"mixed_expectation_mc", 60, mixed_expectation_mc},
      {"u_statistic", 60, u_statistic},
      {"null_calibration", 120, null_calibration},
      {"dimension_decay", 600, dimension_decay},
      {"divergence_ordering", 120, divergence_ordering},
      {"wasserstein_scale", 1, wasserstein_scale},
      {"gradient_check", 60, gradient_check},
      {"probe_smoke", 60, probe_smoke},
      {"sweep_direction", 600, sweep_direction},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> selected(argv + 1, argv + argc);
  if (selected.size() == 1 && selected[0] == "--list") {
    for (const Criterion& c : criteria()) std::printf("%s\n", c.name);
    return 0;
  }
  for (const std::string& name : selected) {
    if (std::none_of(criteria().begin(), criteria().end(), [&](const Criterion& c) { return name == c.name; })) {
      std::fprintf(stderr, "unknown criterion '%s' (try --list)\n", name.c_str());
      return 2;
    }
  }

  int failures = 0;
  for (const Criterion& c : criteria()) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.name) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds <= c.time_limit_s;
    const bool pass = outcome.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %-22s %s [%.2f s%s]\n", pass ? "PASS" : "FAIL", c.name, outcome.detail.c_str(), seconds,
                in_time ? "" : fmt(", limit %.0f s", c.time_limit_s).c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

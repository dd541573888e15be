#include "gpmlab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <ostream>
#include <stdexcept>

#include "gpmlab/bounds.hpp"
#include "gpmlab/chain.hpp"
#include "gpmlab/limit_stats.hpp"
#include "gpmlab/observables.hpp"
#include "gpmlab/rng.hpp"

namespace gpmlab::acceptance {

namespace {

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return std::string(buf);
}

int boundary_index(const Grid& grid, double x) {
  const auto& b = grid.boundaries();
  for (std::size_t i = 0; i < b.size(); ++i)
    if (std::abs(b[i] - x) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<int>(i);
  throw std::runtime_error(fmt("grid carries no boundary at %.6g", x));
}

Eigen::MatrixXd random_probe(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd F(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) F(i, j) = 2 * rng.uniform() - 1;
  return F;
}

AlphaFn wrap_alpha(const AlphaSequence& seq) {
  return [&seq](int k) { return seq.value(k); };
}

// Q envelope for the centered half-interval indicator: |f - nu(f)| is
// bounded by max(m, 1-m).
TailSpec indicator_envelope(const MapContext& mc) {
  const double m = mc.density.nu_interval(0.0, 0.5);
  return TailSpec::cutoff(1.0, std::max(m, 1.0 - m));
}

CriterionResult kernel_algebra(SharedContext& ctx) {
  double worst_row = 0, worst_stat = 0, worst_dual = 0;
  for (double gamma : {0.25, 0.5}) {
    const MapContext& mc = ctx.at(gamma);
    const auto& P = mc.kernel.P();
    const auto& nu = mc.kernel.nu();
    const int n = mc.kernel.cells();

    Eigen::VectorXd row_sums = P * Eigen::VectorXd::Ones(n);
    worst_row = std::max(worst_row, (row_sums.array() - 1).abs().maxCoeff());
    Eigen::VectorXd nuP = P.transpose() * nu;
    worst_stat = std::max(worst_stat, (nuP - nu).cwiseAbs().maxCoeff());

    Rng rng(101);
    for (int pair = 0; pair < 50; ++pair) {
      Eigen::VectorXd f(n), g(n);
      for (int i = 0; i < n; ++i) f[i] = 2 * rng.uniform() - 1;
      for (int i = 0; i < n; ++i) g[i] = 2 * rng.uniform() - 1;
      const double lhs = mc.kernel.nu_mean((P * f).cwiseProduct(g));
      const double rhs = nu.dot(f.cwiseProduct(mc.ulam.L * g));
      worst_dual = std::max(worst_dual, std::abs(lhs - rhs));
    }
  }
  CriterionResult r;
  r.pass = worst_row <= 1e-12 && worst_stat <= 1e-8 && worst_dual <= 1e-6;
  r.detail = fmt("row defect %.2e (tol 1e-12), stationarity %.2e (tol 1e-8), duality %.2e (tol 1e-6)",
                 worst_row, worst_stat, worst_dual);
  return r;
}

CriterionResult operator_decompositions(SharedContext& ctx) {
  const MapContext& mc = ctx.at(0.25);
  MaskedOperators ops(mc.kernel, 30);
  Eigen::MatrixXd F = random_probe(mc.kernel.cells(), 16, 202);
  double worst_dec = 0, worst_ren = 0;
  for (const auto& rep : ops.check_decomposition(F, 30)) worst_dec = std::max(worst_dec, rep.max_abs_error);
  for (const auto& rep : ops.check_renewal(F, 30)) worst_ren = std::max(worst_ren, rep.max_abs_error);
  CriterionResult r;
  r.pass = worst_dec <= 1e-10 && worst_ren <= 1e-10;
  r.detail = fmt("decomposition %.2e, renewal %.2e (tol 1e-10, n <= 30, 16 probe columns)",
                 worst_dec, worst_ren);
  return r;
}

CriterionResult density_exponent(SharedContext& ctx) {
  bool pass = true;
  std::string detail;
  for (double gamma : {0.25, 0.5}) {
    const MapContext& mc = ctx.at(gamma);
    std::vector<double> xs, ys;
    for (int i = 0; i <= 200; ++i) {
      const double x = 1e-4 * std::pow(100.0, i / 200.0);
      xs.push_back(x);
      ys.push_back(mc.density.interp_h(x));
    }
    const LogLogFit fit = fit_loglog(xs, ys, 0.0, 1.0);
    const bool slope_ok = fit.valid && std::abs(fit.slope + gamma) <= 0.1;

    const SeriesExtension ext = density_series_extension(mc.map, mc.density, 48);
    const double z1 = mc.kernel.z1();
    double worst_rel = 0;
    int points = 0;
    for (std::size_t i = 0; i < ext.x.size(); ++i) {
      if (ext.x[i] < 0.5 * z1 || ext.x[i] > z1) continue;
      const double ref = mc.density.interp_h(ext.x[i]);
      worst_rel = std::max(worst_rel, std::abs(ext.value[i] - ref) / ref);
      ++points;
    }
    const bool series_ok = points > 0 && worst_rel <= 0.05;
    pass = pass && slope_ok && series_ok;
    detail += fmt("g=%.2f slope %.3f (target %.2f +- 0.1), series gap %.3f on %d pts; ",
                  gamma, fit.slope, -gamma, worst_rel, points);
  }
  CriterionResult r;
  r.pass = pass;
  r.detail = detail;
  return r;
}

CriterionResult z_orbit_asymptotics(SharedContext& ctx) {
  bool pass = true;
  std::string detail;
  for (double gamma : {0.25, 0.5}) {
    const MapContext& mc = ctx.at(gamma);
    const ZSequence z = z_sequence(mc.map, 20000);
    const double ratio = z_ratio_diagnostic(z, 10000);
    const double target = std::pow(2.0, 1.0 / gamma);
    const double rel = std::abs(ratio - target) / target;
    pass = pass && rel <= 0.05;
    detail += fmt("g=%.2f z_n/z_2n %.4f vs %.4f (rel %.4f); ", gamma, ratio, target, rel);
  }
  CriterionResult r;
  r.pass = pass;
  r.detail = detail;
  return r;
}

double fitted_slope(const std::vector<double>& indexed_from1, std::size_t n_lo, std::size_t n_hi) {
  return fit_loglog_range(indexed_from1, n_lo, n_hi).slope;
}

CriterionResult alpha_decay(SharedContext& ctx) {
  const AlphaSequence& a1_half = ctx.alpha(0.5, 1);
  const AlphaSequence& a1_third = ctx.alpha(1.0 / 3.0, 1);
  const AlphaSequence& a2_half = ctx.alpha(0.5, 2);

  std::vector<double> v_half(a1_half.values.begin() + 1, a1_half.values.end());
  std::vector<double> v_third(a1_third.values.begin() + 1, a1_third.values.end());
  const double s_half = fitted_slope(v_half, 8, 128);
  const double s_third = fitted_slope(v_third, 8, 128);
  const bool slopes_ok = std::abs(s_half + 1.0) <= 0.2 && std::abs(s_third + 2.0) <= 0.6;

  bool order_ok = true, mono_ok = true;
  for (std::size_t n = 0; n < a1_half.values.size(); ++n)
    order_ok = order_ok && a2_half.values[n] >= a1_half.values[n] - 1e-12;
  for (const AlphaSequence* s : {&a1_half, &a1_third, &a2_half})
    for (std::size_t n = 1; n < s->values.size(); ++n)
      mono_ok = mono_ok && s->values[n] <= s->values[n - 1] + 1e-15;

  CriterionResult r;
  r.pass = slopes_ok && order_ok && mono_ok;
  r.detail = fmt("slope g=0.5: %.3f (target -1 +- 0.2), g=1/3: %.3f (target -2 +- 0.6), "
                 "order2 >= order1: %s, nonincreasing: %s",
                 s_half, s_third, order_ok ? "yes" : "NO", mono_ok ? "yes" : "NO");
  return r;
}

CriterionResult remainder_decay(SharedContext& ctx) {
  const MapContext& mc = ctx.at(0.5);
  Eigen::VectorXd f = mc.kernel.centered_indicator(boundary_index(mc.grid, 0.5));
  const EnReport rep = en_remainder(mc.kernel, f, 64);
  const double slope = fitted_slope(rep.var, 8, 64);
  CriterionResult r;
  r.pass = std::abs(slope + 1.0) <= 0.3;
  r.detail = fmt("variation slope %.3f over n in [8,64] (target -1 +- 0.3)", slope);
  return r;
}

CriterionResult time_reversal(SharedContext& ctx) {
  const MapContext& mc = ctx.at(0.25);
  const ObservableSpec f = ObservableSpec::indicator(0.0, 0.5);
  const TimeReversalReport rep = time_reversal_test(mc.map, mc.density, f, 256, 10000, 707);
  CriterionResult r;
  r.pass = rep.ks.p_value > 0.01;
  r.detail = fmt("two-sample KS D=%.4f p=%.4f (need p > 0.01); means orbit %.3f chain %.3f",
                 rep.ks.statistic, rep.ks.p_value, rep.orbit_mean, rep.chain_mean);
  return r;
}

CriterionResult clt_desk_scale(SharedContext& ctx) {
  const MapContext& mc = ctx.at(0.25);
  const double sigma = std::sqrt(ctx.sigma2_half_indicator(0.25));
  const ObservableSpec f = ObservableSpec::indicator(0.0, 0.5);
  StreamFactory factory = orbit_stream_factory(mc.map, mc.density, f, 808);
  const KsResult ks = clt_gaussian_ks(factory, sigma, std::size_t{1} << 14, 10000);
  CriterionResult r;
  r.pass = ks.statistic < 0.02;
  r.detail = fmt("KS distance %.4f to N(0,1) at n=2^14, sigma=%.4f (need < 0.02)", ks.statistic,
                 sigma);
  return r;
}

CriterionResult bounded_lil(SharedContext& ctx) {
  const MapContext& mc = ctx.at(0.25);
  const AlphaSequence& a1 = ctx.alpha(0.25, 1);
  const LilConstant A = lil_constant(indicator_envelope(mc), wrap_alpha(a1), 2048);
  const ObservableSpec f = ObservableSpec::indicator(0.0, 0.5);
  StreamFactory factory = orbit_stream_factory(mc.map, mc.density, f, 909);
  const LilScanReport scan = lil_ratio_scan(factory, A.a_map, 20, 200);
  const double worst = *std::max_element(scan.replica_max.begin(), scan.replica_max.end());
  CriterionResult r;
  r.pass = scan.below_count == 200;
  r.detail = fmt("A=%.3f (map form, tail %.1f%%), %zu/200 replicas below, worst ratio %.3f",
                 A.a_map, 100 * A.tail_relative, scan.below_count, worst);
  return r;
}

CriterionResult maximal_inequality(SharedContext& ctx) {
  const MapContext& mc = ctx.at(0.25);
  const double sigma = std::sqrt(ctx.sigma2_half_indicator(0.25));
  const int n = 1024;
  const double base = sigma * std::sqrt(static_cast<double>(n));
  std::vector<double> x_grid;
  for (double c : {0.1, 0.2, 0.4, 0.8, 1.6, 3.2}) x_grid.push_back(c * base);

  const ObservableSpec f = ObservableSpec::indicator(0.0, 0.5);
  const DominationReport rep =
      domination_test_fn(mc.map, mc.density, f, indicator_envelope(mc), wrap_alpha(ctx.alpha(0.25, 1)),
                         wrap_alpha(ctx.alpha(0.25, 2)), n, x_grid, 10000, 1010);
  std::string detail = fmt("%zu replicas; ", rep.replicas);
  for (const auto& pt : rep.points)
    detail += fmt("[5x=%.1f mc<=%.1e bd=%.1e %s] ", 5 * pt.x, pt.wilson_upper, pt.bound,
                  pt.pass ? "ok" : "FAIL");
  CriterionResult r;
  r.pass = rep.all_pass;
  r.detail = detail;
  return r;
}

CriterionResult pinelis_domination(SharedContext&) {
  const std::size_t n = 10000, replicas = 100000;
  const double root = std::sqrt(static_cast<double>(n));
  const PinelisTest t2 = pinelis_martingale_test(1.0, n, 2 * root, replicas, 1111);
  const PinelisTest t4 = pinelis_martingale_test(1.0, n, 4 * root, replicas, 1112);
  CriterionResult r;
  r.pass = t2.pass && t4.pass;
  r.detail = fmt("x=2rt(n): mc %.4f <= bound %.4f; x=4rt(n): mc %.2e <= bound %.2e",
                 t2.wilson_upper, t2.bound, t4.wilson_upper, t4.bound);
  return r;
}

CriterionResult covariance_domination(SharedContext& ctx) {
  const MapContext& mc = ctx.at(0.5);
  const TailSpec tail = indicator_envelope(mc);
  const AlphaSequence& a1 = ctx.alpha(0.5, 1);
  const AlphaFn afn = wrap_alpha(a1);

  Eigen::VectorXd f = to_grid_function(ObservableSpec::indicator(0.0, 0.5), mc.grid);
  const CorrelationResult corr = correlation_sequence(mc.kernel, f, f, 64);
  Eigen::VectorXd f0 = f.array() - mc.kernel.nu_mean(f);
  const double var0 = mc.kernel.nu_mean(f0.cwiseProduct(f0));

  bool pass = var0 <= rio_covariance_bound(tail, afn, 0);
  double worst_margin = rio_covariance_bound(tail, afn, 0) - var0;
  for (int i = 1; i <= 64; ++i) {
    const double bound = rio_covariance_bound(tail, afn, i);
    const double margin = bound - std::abs(corr.values[static_cast<std::size_t>(i) - 1]);
    pass = pass && margin >= 0;
    worst_margin = std::min(worst_margin, margin);
  }
  CriterionResult r;
  r.pass = pass;
  r.detail = fmt("lags 0..64, smallest bound-minus-covariance margin %.3e", worst_margin);
  return r;
}

CriterionResult slln_rates(SharedContext& ctx) {
  const MapContext& mc = ctx.at(0.4);
  const double p = 1.5;
  const ObservableSpec f = ObservableSpec::power_singularity((1 - p * 0.4) / p);
  StreamFactory factory = orbit_stream_factory(mc.map, mc.density, f, 1313);
  const SllnScanReport strong = slln_rate_scan(factory, p, 0.8, 20, 100);
  const SllnScanReport weak = slln_rate_scan(factory, p, 0.0, 20, 100);
  CriterionResult r;
  r.pass = strong.fraction_decreasing >= 0.9 && weak.fraction_decreasing <= 0.5;
  r.detail = fmt("b=0.8 decreasing in %.0f%% (need >= 90%%), b=0 in %.0f%% (need <= 50%%)",
                 100 * strong.fraction_decreasing, 100 * weak.fraction_decreasing);
  return r;
}

CriterionResult stable_law(SharedContext& ctx) {
  const MapContext& mc = ctx.at(0.4);
  const double p = 1.5;
  const ObservableSpec f = ObservableSpec::power_singularity((1 - p * 0.4) / p);
  StreamFactory factory = orbit_stream_factory(mc.map, mc.density, f, 1414);
  const StableLawReport rep = stable_law_diagnostics(factory, p, std::size_t{1} << 16, 10000, 77);

  const ObservableSpec f2 = ObservableSpec::power_singularity((1 - 2 * 0.4) / 2);
  StreamFactory factory2 = orbit_stream_factory(mc.map, mc.density, f2, 1415);
  const StableLawReport rep2 = stable_law_diagnostics(factory2, 2.0, std::size_t{1} << 18, 4000, 78);

  const bool hill_ok = std::abs(rep.hill.alpha - p) <= 0.2;
  const bool ratio_ok = rep.tail_ratio >= 5;
  const bool ks_ok = rep2.ks_gaussian.statistic < 0.05;
  CriterionResult r;
  r.pass = hill_ok && ratio_ok && ks_ok;
  r.detail = fmt("Hill %.3f (target 1.5 +- 0.2), tail ratio %.1f (need >= 5), "
                 "p=2 KS %.4f at n=2^18 (need < 0.05)",
                 rep.hill.alpha, rep.tail_ratio, rep2.ks_gaussian.statistic);
  return r;
}

CriterionResult change_of_variables(SharedContext&) {
  const double gamma = 0.25, p = 1.5;
  const std::vector<TailSpec> specs = {
      TailSpec::power(1.0, 4.0),          TailSpec::power(0.7, 3.0),
      TailSpec::power(2.0, 6.0),          TailSpec::power(1.3, 2.5),
      TailSpec::power_log(1.0, 4.0, 1.5), TailSpec::power_log(0.8, 3.0, -0.5),
      TailSpec::power_log(1.0, 5.0, 2.0), TailSpec::power_log(1.5, 2.5, 0.8),
      TailSpec::cutoff(1.0, 1.0),         TailSpec::cutoff(0.6, 2.4)};
  const AlphaFn synth = [](int i) { return std::pow(i + 1.0, -3.0); };

  double worst_gap = 0;
  bool verdicts_ok = true;
  for (const auto& tail : specs) {
    const ChangeOfVariablesResult cov = change_of_variables_identity(tail, gamma, p);
    worst_gap = std::max(worst_gap, cov.rel_gap);
    const bool cond = check_condition(tail, gamma, p, "rate").holds;
    const bool proxy = slln_series_bound(tail, synth, p, gamma, 256).proxy_finite;
    verdicts_ok = verdicts_ok && cond && proxy;
  }
  CriterionResult r;
  r.pass = worst_gap < 1e-6 && verdicts_ok;
  r.detail = fmt("worst lhs/rhs gap %.2e over 10 descriptors (need < 1e-6), verdicts agree: %s",
                 worst_gap, verdicts_ok ? "yes" : "NO");
  return r;
}

bool bytes_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool bytes_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

CriterionResult determinism(SharedContext&) {
  auto build = [] {
    GpmMap map = GpmMap::lsv(0.5);
    Grid grid = make_graded_grid(map, 256);
    DensityModel density = invariant_density(map, grid);
    KernelModel kernel = kernel_matrix(map, density);
    AlphaOptions opts;
    opts.n_max = 32;
    AlphaSequence alpha = alpha_estimate(kernel, 1, opts);
    Trajectory chain = simulate_chain(map, density, 2000, 1616);
    Trajectory orbit = simulate_orbit(map, density, 2000, 1617);
    return std::make_tuple(density.nu(), alpha.values, chain.states, orbit.states);
  };
  const auto a = build();
  const auto b = build();
  const bool ok = bytes_equal(std::get<0>(a), std::get<0>(b)) &&
                  bytes_equal(std::get<1>(a), std::get<1>(b)) &&
                  bytes_equal(std::get<2>(a), std::get<2>(b)) &&
                  bytes_equal(std::get<3>(a), std::get<3>(b));
  CriterionResult r;
  r.pass = ok;
  r.detail = ok ? "density, alpha, chain and orbit artifacts bit-identical across rebuilds "
                  "(pipelines are sequential; thread count does not enter)"
                : "artifacts differ between identical rebuilds";
  return r;
}

struct CriterionEntry {
  const char* name;
  CriterionResult (*run)(SharedContext&);
};

const CriterionEntry registry[criterion_count] = {
    {"kernel-algebra", kernel_algebra},
    {"operator-decompositions", operator_decompositions},
    {"density-exponent", density_exponent},
    {"z-orbit-asymptotics", z_orbit_asymptotics},
    {"alpha-decay", alpha_decay},
    {"remainder-decay", remainder_decay},
    {"time-reversal", time_reversal},
    {"clt-desk-scale", clt_desk_scale},
    {"bounded-lil", bounded_lil},
    {"maximal-inequality", maximal_inequality},
    {"pinelis-domination", pinelis_domination},
    {"covariance-domination", covariance_domination},
    {"slln-rates", slln_rates},
    {"stable-law", stable_law},
    {"change-of-variables", change_of_variables},
    {"determinism", determinism},
};

}  // namespace

int SharedContext::key(double gamma) { return static_cast<int>(std::lround(gamma * 100000)); }

const MapContext& SharedContext::at(double gamma) {
  const int k = key(gamma);
  auto it = contexts_.find(k);
  if (it == contexts_.end()) {
    GpmMap map = GpmMap::lsv(gamma);
    Grid grid = make_graded_grid(map, cells_);
    UlamResult ulam = ulam_matrix(map, grid);
    DensityModel density = invariant_density(map, grid);
    KernelModel kernel = kernel_matrix(map, density);
    auto mc = std::make_unique<MapContext>(MapContext{std::move(map), std::move(grid),
                                                      std::move(ulam), std::move(density),
                                                      std::move(kernel)});
    it = contexts_.emplace(k, std::move(mc)).first;
  }
  return *it->second;
}

const AlphaSequence& SharedContext::alpha(double gamma, int order) {
  const auto k = std::make_pair(key(gamma), order);
  auto it = alphas_.find(k);
  if (it == alphas_.end()) {
    const MapContext& mc = at(gamma);
    auto seq = std::make_unique<AlphaSequence>(alpha_estimate(mc.kernel, order));
    it = alphas_.emplace(k, std::move(seq)).first;
  }
  return *it->second;
}

double SharedContext::sigma2_half_indicator(double gamma) {
  const int k = key(gamma);
  auto it = sigma2_.find(k);
  if (it == sigma2_.end()) {
    const MapContext& mc = at(gamma);
    Eigen::VectorXd f = to_grid_function(ObservableSpec::indicator(0.0, 0.5), mc.grid);
    it = sigma2_.emplace(k, sigma2_spectral(mc.kernel, f, 512).sigma2).first;
  }
  return it->second;
}

CriterionResult run_criterion(SharedContext& ctx, int id) {
  if (id < 1 || id > criterion_count) throw std::out_of_range("criterion id out of range");
  const CriterionEntry& entry = registry[id - 1];
  CriterionResult r;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    r = entry.run(ctx);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = fmt("exception: %s", e.what());
  }
  r.id = id;
  r.name = entry.name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<CriterionResult> run_all(SharedContext& ctx, std::ostream& out) {
  std::vector<CriterionResult> results;
  for (int id = 1; id <= criterion_count; ++id) {
    CriterionResult r = run_criterion(ctx, id);
    out << (r.pass ? "PASS" : "FAIL") << "  " << r.id << "  " << r.name << "  [" << r.detail
        << "]  (" << fmt("%.1fs", r.seconds) << ")\n";
    out.flush();
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace gpmlab::acceptance

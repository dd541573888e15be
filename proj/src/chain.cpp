#include "gpmlab/chain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace gpmlab {

double sample_stationary(const DensityModel& density, Rng& rng) {
  const auto& cum = density.cumulative();
  const auto& grid = density.grid();
  const double u = rng.uniform();
  // cum has cells()+1 entries with cum[i]..cum[i+1] spanning cell i, so the
  // upper_bound position is one past the cell that owns u.
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  int i = static_cast<int>(it - cum.begin()) - 1;
  i = std::max(0, std::min(i, grid.cells() - 1));
  const double lo = cum[static_cast<std::size_t>(i)];
  const double mass = cum[static_cast<std::size_t>(i) + 1] - lo;
  const double frac = (mass > 0) ? (u - lo) / mass : 0.5;
  double x = grid.left(i) + frac * grid.width(i);
  if (x <= 0) x = 0.5 * grid.width(0);
  if (x >= 1) x = 0.5 * (grid.left(grid.cells() - 1) + 1.0);
  return x;
}

ChainStepper::ChainStepper(const GpmMap& map, const DensityModel& density)
    : map_(map), dens_(density) {}

double ChainStepper::step(double x, Rng& rng) {
  if (x < 1e-300) x = 1e-300;
  const auto branches = map_.branches_through(x);
  if (branches.empty()) throw std::runtime_error("chain step: no admissible branch");
  const double hx = dens_.interp_h(x);
  std::vector<double> w(branches.size());
  std::vector<double> y(branches.size());
  double raw = 0;
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const int b = branches[k];
    const double yb = map_.inverse_branch(b, x);
    y[k] = yb;
    const double wk = dens_.interp_h(yb) * std::abs(map_.inverse_deriv_at(b, yb)) / hx;
    w[k] = wk;
    raw += wk;
  }
  if (!(raw > 0) || std::abs(raw - 1.0) > 0.2) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "chain step: raw kernel weight sum %.6f at x=%.6e drifted past 20%%", raw, x);
    throw std::runtime_error(buf);
  }
  last_raw_ = raw;
  sum_accum_ += raw;
  min_ = std::min(min_, raw);
  max_ = std::max(max_, raw);
  ++steps_;

  const double u = rng.uniform() * raw;
  double acc = 0;
  for (std::size_t k = 0; k < branches.size(); ++k) {
    acc += w[k];
    if (u <= acc) return y[k];
  }
  return y.back();
}

Trajectory simulate_chain(const GpmMap& map, const DensityModel& density, std::size_t n,
                          std::uint64_t seed, const ChainOptions& opts) {
  Rng rng(seed);
  ChainStepper stepper(map, density);
  double x = sample_stationary(density, rng);
  for (int i = 0; i < opts.burn_in; ++i) x = stepper.step(x, rng);

  Trajectory out;
  out.mode = TrajectoryMode::chain;
  out.seed = seed;
  out.burn_in = opts.burn_in;
  out.states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.states.push_back(x);
    if (i + 1 < n) x = stepper.step(x, rng);
  }
  out.weight_sum_mean = stepper.raw_sum_mean();
  out.weight_sum_min = stepper.raw_sum_min();
  out.weight_sum_max = stepper.raw_sum_max();
  return out;
}

Trajectory simulate_orbit(const GpmMap& map, const DensityModel& density, std::size_t n,
                          std::uint64_t seed) {
  Rng rng(seed);
  double x = sample_stationary(density, rng);

  Trajectory out;
  out.mode = TrajectoryMode::orbit;
  out.seed = seed;
  out.states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.states.push_back(x);
    if (i + 1 < n) x = map.apply(x);
  }
  return out;
}

TimeReversalReport time_reversal_test(const GpmMap& map, const DensityModel& density,
                                      const ObservableSpec& f, std::size_t n,
                                      std::size_t replicas, std::uint64_t seed) {
  if (n == 0 || replicas < 2) throw std::invalid_argument("time reversal: need n>=1, replicas>=2");
  const double mean = nu_mean(f, density);

  std::vector<double> orbit_max(replicas), chain_max(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    {
      Trajectory orb = simulate_orbit(map, density, n, Rng(seed, 2 * r).next());
      double s = 0, m = 0;
      for (double x : orb.states) {
        s += f.eval(x) - mean;
        m = std::max(m, std::abs(s));
      }
      orbit_max[r] = m;
    }
    {
      Trajectory ch = simulate_chain(map, density, n, Rng(seed, 2 * r + 1).next());
      double s = 0, m = 0;
      for (auto it = ch.states.rbegin(); it != ch.states.rend(); ++it) {
        s += f.eval(*it) - mean;
        m = std::max(m, std::abs(s));
      }
      chain_max[r] = m;
    }
  }

  TimeReversalReport rep;
  rep.replicas = replicas;
  double so = 0, sc = 0;
  for (std::size_t r = 0; r < replicas; ++r) {
    so += orbit_max[r];
    sc += chain_max[r];
  }
  rep.orbit_mean = so / static_cast<double>(replicas);
  rep.chain_mean = sc / static_cast<double>(replicas);
  rep.ks = ks_two_sample(orbit_max, chain_max);
  return rep;
}

StreamFactory orbit_stream_factory(const GpmMap& map, const DensityModel& density,
                                   const ObservableSpec& f, std::uint64_t master_seed) {
  const double mean = nu_mean(f, density);
  return [&map, &density, &f, mean, master_seed](std::uint64_t replica) -> ValueStream {
    auto rng = std::make_shared<Rng>(master_seed, replica);
    auto x = std::make_shared<double>(sample_stationary(density, *rng));
    return [&map, &f, mean, x]() {
      const double v = f.eval(*x) - mean;
      *x = map.apply(*x);
      return v;
    };
  };
}

StreamFactory chain_stream_factory(const GpmMap& map, const DensityModel& density,
                                   const ObservableSpec& f, std::uint64_t master_seed,
                                   const ChainOptions& opts) {
  const double mean = nu_mean(f, density);
  return [&map, &density, &f, mean, master_seed, opts](std::uint64_t replica) -> ValueStream {
    auto rng = std::make_shared<Rng>(master_seed, replica);
    auto stepper = std::make_shared<ChainStepper>(map, density);
    auto x = std::make_shared<double>(sample_stationary(density, *rng));
    for (int i = 0; i < opts.burn_in; ++i) *x = stepper->step(*x, *rng);
    return [&f, mean, rng, stepper, x]() {
      const double v = f.eval(*x) - mean;
      *x = stepper->step(*x, *rng);
      return v;
    };
  };
}

StreamFactory gaussian_stream_factory(double mean, double sd, std::uint64_t master_seed) {
  return [mean, sd, master_seed](std::uint64_t replica) -> ValueStream {
    auto rng = std::make_shared<Rng>(master_seed, replica);
    return [mean, sd, rng]() { return mean + sd * rng->normal(); };
  };
}

StreamFactory pareto_stream_factory(double alpha, double scale, bool symmetric,
                                    std::uint64_t master_seed) {
  if (!(alpha > 0) || !(scale > 0)) throw std::invalid_argument("pareto stream: alpha, scale > 0");
  return [alpha, scale, symmetric, master_seed](std::uint64_t replica) -> ValueStream {
    auto rng = std::make_shared<Rng>(master_seed, replica);
    return [alpha, scale, symmetric, rng]() {
      const double u = rng->uniform();
      double v = scale * std::pow(u, -1.0 / alpha);
      if (symmetric && (rng->next() & 1ULL)) v = -v;
      return v;
    };
  };
}

std::vector<double> run_replicas(const StreamFactory& factory, std::size_t replicas,
                                 const std::function<double(ValueStream&)>& summarize) {
  std::vector<double> out(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    ValueStream stream = factory(r);
    out[r] = summarize(stream);
  }
  return out;
}

}  // namespace gpmlab

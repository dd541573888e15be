#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gpmlab/density.hpp"
#include "gpmlab/gpm_map.hpp"
#include "gpmlab/numerics.hpp"
#include "gpmlab/observables.hpp"
#include "gpmlab/rng.hpp"

namespace gpmlab {

enum class TrajectoryMode { chain, orbit };

struct Trajectory {
  std::vector<double> states;
  TrajectoryMode mode = TrajectoryMode::orbit;
  std::uint64_t seed = 0;
  int burn_in = 0;
  // Raw kernel-weight sums along the trajectory (chain mode): the sum is 1
  // for the exact density, so its spread measures discretization quality.
  double weight_sum_mean = 1, weight_sum_min = 1, weight_sum_max = 1;
};

// Inverse-CDF draw from the discretized stationary measure: cell by mass,
// position uniform inside the cell (one uniform drives both).
double sample_stationary(const DensityModel& density, Rng& rng);

// One backward transition of the dual chain.  From x, the admissible moves
// are the inverse-branch images v_k(x), weighted by h(v_k x)|v_k'(x)|/h(x);
// weights are renormalized pointwise and the raw sum tracked.
class ChainStepper {
 public:
  ChainStepper(const GpmMap& map, const DensityModel& density);

  double step(double x, Rng& rng);

  double last_raw_sum() const { return last_raw_; }
  double raw_sum_mean() const { return steps_ ? sum_accum_ / static_cast<double>(steps_) : 1.0; }
  double raw_sum_min() const { return min_; }
  double raw_sum_max() const { return max_; }
  std::size_t steps() const { return steps_; }

 private:
  const GpmMap& map_;
  const DensityModel& dens_;
  double last_raw_ = 1, sum_accum_ = 0, min_ = 1, max_ = 1;
  std::size_t steps_ = 0;
};

struct ChainOptions {
  int burn_in = 1000;
};

Trajectory simulate_chain(const GpmMap& map, const DensityModel& density, std::size_t n,
                          std::uint64_t seed, const ChainOptions& opts = {});

Trajectory simulate_orbit(const GpmMap& map, const DensityModel& density, std::size_t n,
                          std::uint64_t seed);

struct TimeReversalReport {
  KsResult ks;
  std::size_t replicas = 0;
  double orbit_mean = 0, chain_mean = 0;
};

// Two-sample comparison of max_k |sum_{i<k} (f(T^i x) - nu f)| from orbits
// against the suffix-sum maxima max_k |sum_{i=k}^n X_i| from the chain; the
// two are equal in distribution by time reversal.
TimeReversalReport time_reversal_test(const GpmMap& map, const DensityModel& density,
                                      const ObservableSpec& f, std::size_t n,
                                      std::size_t replicas, std::uint64_t seed);

// A stream yields consecutive values X_1, X_2, ...; a factory binds replica r
// to its own RNG stream derived from (master_seed, r), so results do not
// depend on scheduling or on how many replicas run.
using ValueStream = std::function<double()>;
using StreamFactory = std::function<ValueStream(std::uint64_t)>;

// Centered observable along a deterministic orbit started from nu.
StreamFactory orbit_stream_factory(const GpmMap& map, const DensityModel& density,
                                   const ObservableSpec& f, std::uint64_t master_seed);

// Centered observable along the dual chain (burn-in applied at construction).
StreamFactory chain_stream_factory(const GpmMap& map, const DensityModel& density,
                                   const ObservableSpec& f, std::uint64_t master_seed,
                                   const ChainOptions& opts = {});

StreamFactory gaussian_stream_factory(double mean, double sd, std::uint64_t master_seed);

// Pareto(alpha) with the given scale, optionally with a random sign.
StreamFactory pareto_stream_factory(double alpha, double scale, bool symmetric,
                                    std::uint64_t master_seed);

// Applies `summarize` to each replica's fresh stream, in replica order.
std::vector<double> run_replicas(const StreamFactory& factory, std::size_t replicas,
                                 const std::function<double(ValueStream&)>& summarize);

}  // namespace gpmlab

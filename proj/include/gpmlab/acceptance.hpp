#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gpmlab/density.hpp"
#include "gpmlab/gpm_map.hpp"
#include "gpmlab/grid.hpp"
#include "gpmlab/kernel.hpp"

namespace gpmlab::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

// Per-map artifacts shared across criteria: built once per gamma on first
// use, at the reference resolution (2000 graded cells).
struct MapContext {
  GpmMap map;
  Grid grid;
  UlamResult ulam;
  DensityModel density;
  KernelModel kernel;
};

class SharedContext {
 public:
  explicit SharedContext(int cells = 2000) : cells_(cells) {}

  const MapContext& at(double gamma);
  const AlphaSequence& alpha(double gamma, int order);
  double sigma2_half_indicator(double gamma);  // spectral sigma^2 for 1_{[0,1/2]}

  int cells() const { return cells_; }

 private:
  int cells_;
  std::map<int, std::unique_ptr<MapContext>> contexts_;
  std::map<std::pair<int, int>, std::unique_ptr<AlphaSequence>> alphas_;
  std::map<int, double> sigma2_;
  static int key(double gamma);
};

inline constexpr int criterion_count = 16;

// Runs criterion `id` (1-based).  Throws std::out_of_range for unknown ids;
// internal failures are caught and reported as FAIL with the message.
CriterionResult run_criterion(SharedContext& ctx, int id);

// Runs all criteria in order, streaming one "PASS|FAIL  id  name  detail"
// line each to `out`.  Returns the full list.
std::vector<CriterionResult> run_all(SharedContext& ctx, std::ostream& out);

}  // namespace gpmlab::acceptance

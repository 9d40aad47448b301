#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "advest/config.hpp"

namespace advest {

struct SweepCell {
  int sample_length = 0;
  int partial_coef = 0;
  std::uint64_t seed = 0;
  double final_metric = 0.0;
  bool failed = false;
  std::string note;
};

/// Mean of mean_return_100 over the last 10% of iterations (at least one).
double final_metric(const RunLog& log);

/// Runs every (T, epsilon, seed) grid cell; cells with epsilon > T are
/// skipped with a logged notice and produce no row, failed cells keep a row
/// with metric nan. Workers are bounded by the ADVEST_THREADS environment
/// variable; results are reduced in grid order regardless of scheduling.
std::vector<SweepCell> run_sweep(const ExperimentConfig& config,
                                 std::ostream& log);

void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells,
                     std::uint64_t config_hash);

/// Worker count: min(ADVEST_THREADS or hardware concurrency, n_cells).
int sweep_worker_count(int n_cells);

}  // namespace advest

#include "advest/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "advest/csv.hpp"
#include "advest/envs.hpp"

namespace advest {

double final_metric(const RunLog& log) {
  if (log.records.empty()) return std::nan("");
  const std::size_t n = log.records.size();
  const std::size_t window = std::max<std::size_t>(1, n / 10);
  double acc = 0.0;
  for (std::size_t i = n - window; i < n; ++i)
    acc += log.records[i].mean_return_100;
  return acc / static_cast<double>(window);
}

int sweep_worker_count(int n_cells) {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (const char* env = std::getenv("ADVEST_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) workers = std::min(workers, cap);
  }
  return std::max(1, std::min(workers, n_cells));
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& config,
                                 std::ostream& log) {
  if (config.sweep_sample_lengths.empty() ||
      config.sweep_partial_coefs.empty())
    throw ConfigError("sweep grids must be non-empty");
  if (config.sweep_n_seeds < 1)
    throw ConfigError("sweep needs at least one seed");

  std::mutex log_mutex;
  std::vector<SweepCell> cells;
  for (int t : config.sweep_sample_lengths)
    for (int eps : config.sweep_partial_coefs)
      for (int s = 0; s < config.sweep_n_seeds; ++s) {
        SweepCell cell;
        cell.sample_length = t;
        cell.partial_coef = eps;
        cell.seed = config.trainer.seed + static_cast<std::uint64_t>(s);
        if (eps > t) {
          cell.failed = true;
          cell.note = "skipped: partial_coef exceeds sample_length";
        }
        cells.push_back(cell);
      }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      SweepCell& cell = cells[i];
      if (cell.failed) {  // pre-marked skip
        std::lock_guard<std::mutex> lock(log_mutex);
        log << "sweep: skipping T=" << cell.sample_length
            << " epsilon=" << cell.partial_coef << " seed=" << cell.seed
            << " (epsilon > T)\n";
        continue;
      }
      TrainerConfig trainer = config.trainer;
      trainer.sample_length = cell.sample_length;
      trainer.partial_coef = cell.partial_coef;
      trainer.seed = cell.seed;
      trainer.checkpoint_every = 0;
      try {
        const RunLog run_log = train(
            trainer, [&]() { return make_env(config.env_name); }, nullptr);
        cell.final_metric = final_metric(run_log);
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.final_metric = std::nan("");
        cell.note = e.what();
        std::lock_guard<std::mutex> lock(log_mutex);
        log << "sweep: cell T=" << cell.sample_length
            << " epsilon=" << cell.partial_coef << " seed=" << cell.seed
            << " failed: " << e.what() << '\n';
        continue;
      }
      std::lock_guard<std::mutex> lock(log_mutex);
      log << "sweep: T=" << cell.sample_length
          << " epsilon=" << cell.partial_coef << " seed=" << cell.seed
          << " metric=" << cell.final_metric << '\n';
    }
  };

  const int workers = sweep_worker_count(static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();
  return cells;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells,
                     std::uint64_t config_hash) {
  csv::write_config_hash(out, config_hash);
  out << "T,epsilon,seed,final_metric\n";
  for (const SweepCell& c : cells) {
    if (!c.note.empty() && c.note.rfind("skipped", 0) == 0)
      continue;  // invalid grid points carry no data row
    out << c.sample_length << ',' << c.partial_coef << ',' << c.seed << ','
        << csv::fmt(c.final_metric) << '\n';
  }
}

}  // namespace advest

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "miab/config.hpp"
#include "miab/metrics.hpp"
#include "miab/simulator.hpp"

namespace miab {

struct RunSpec {
  ScenarioConfig config;
  SimOptions options;
  int replications{1};
  std::uint64_t seed_base{1};
  std::filesystem::path out_dir;
  int jobs{0};  // 0: one worker per hardware thread
};

struct RunOutcome {
  std::uint64_t seed{0};
  std::filesystem::path dir;
  AuditCounters audits;
  std::string error;  // empty on success
};

// Replication i runs with seed seed_base + i and writes to out_dir, or to
// out_dir/rep_XXX when there is more than one replication.
std::vector<RunOutcome> run_replications(const RunSpec& spec);

// Runs jobs on a pool of share-nothing workers; results keep the input order.
std::vector<RunOutcome> run_all(const std::vector<RunSpec>& specs, int jobs);

// 0 when every run finished with clean audits, 3 if any audit fired, 1 on other failures.
int exit_code(const std::vector<RunOutcome>& outcomes);

// The 3 scenarios x 3 packet sizes x 3 passenger fractions.
std::vector<ScenarioConfig> experiment_grid(const ScenarioConfig& base);
std::string grid_run_name(const ScenarioConfig& cfg);

}  // namespace miab

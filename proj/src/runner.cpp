#include "miab/runner.hpp"

#include <atomic>
#include <cstdio>
#include <thread>

#include "miab/errors.hpp"

namespace miab {

namespace {

RunOutcome run_one(ScenarioConfig cfg, SimOptions opts, const std::filesystem::path& dir) {
  RunOutcome out;
  out.seed = cfg.seed;
  out.dir = dir;
  try {
    if (opts.dump_grants || opts.dump_links) opts.dump_dir = dir;
    Simulator sim(cfg, opts);
    sim.run();
    sim.export_to(dir);
    out.audits = sim.metrics().audits;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

struct Job {
  ScenarioConfig cfg;
  SimOptions opts;
  std::filesystem::path dir;
};

std::vector<RunOutcome> run_jobs(const std::vector<Job>& jobs, int degree) {
  std::vector<RunOutcome> results(jobs.size());
  if (degree <= 0) degree = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  degree = std::min<int>(degree, static_cast<int>(jobs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) results[i] = run_one(jobs[i].cfg, jobs[i].opts, jobs[i].dir);
  };
  if (degree <= 1) {
    worker();
    return results;
  }
  std::vector<std::thread> pool;
  for (int k = 0; k < degree; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

std::vector<Job> expand(const RunSpec& spec) {
  if (spec.replications < 1) throw ValidationError("reps", "must be at least 1");
  validate(spec.config);
  std::vector<Job> jobs;
  for (int i = 0; i < spec.replications; ++i) {
    Job j{spec.config, spec.options, spec.out_dir};
    j.cfg.seed = spec.seed_base + static_cast<std::uint64_t>(i);
    if (spec.replications > 1) {
      char name[32];
      std::snprintf(name, sizeof name, "rep_%03d", i);
      j.dir = spec.out_dir / name;
    }
    jobs.push_back(std::move(j));
  }
  return jobs;
}

}  // namespace

std::vector<RunOutcome> run_replications(const RunSpec& spec) { return run_jobs(expand(spec), spec.jobs); }

std::vector<RunOutcome> run_all(const std::vector<RunSpec>& specs, int jobs) {
  std::vector<Job> all;
  for (const auto& s : specs)
    for (auto& j : expand(s)) all.push_back(std::move(j));
  return run_jobs(all, jobs);
}

int exit_code(const std::vector<RunOutcome>& outcomes) {
  int code = 0;
  for (const auto& o : outcomes) {
    if (!o.error.empty()) return 1;
    if (o.audits.any()) code = 3;
  }
  return code;
}

std::vector<ScenarioConfig> experiment_grid(const ScenarioConfig& base) {
  std::vector<ScenarioConfig> out;
  for (ScenarioKind k : {ScenarioKind::OnlyMacros, ScenarioKind::MacrosPicos, ScenarioKind::MIab})
    for (int bits : {1024, 2048, 3072})
      for (double f : {0.25, 0.50, 0.75}) {
        ScenarioConfig c = base;
        c.scenario_kind = k;
        c.cbr_packet_bits = bits;
        c.passenger_fraction = f;
        validate(c);
        out.push_back(c);
      }
  return out;
}

std::string grid_run_name(const ScenarioConfig& cfg) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s_p%d_f%02d", std::string(to_string(cfg.scenario_kind)).c_str(),
                cfg.cbr_packet_bits, static_cast<int>(cfg.passenger_fraction * 100 + 0.5));
  return buf;
}

}  // namespace miab

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "miab/config.hpp"
#include "miab/errors.hpp"
#include "miab/metrics.hpp"
#include "miab/runner.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> scenario;
  std::optional<double> passengers;
  std::optional<int> packet;
  std::optional<long long> slots;
  std::optional<unsigned long long> seed;
  std::optional<double> hysteresis_db;
  int reps{1};
  int jobs{0};
  std::string out;
  bool dump_links{false};
  bool dump_grants{false};
  std::string admission{"off"};
  std::string mcs_table;
  bool no_bsr{false};
  bool discard_inflight{false};
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config_path, "JSON configuration file");
  app->add_option("--scenario", f.scenario, "only_macros | macros_picos | miab");
  app->add_option("--passengers", f.passengers, "passenger fraction (0.25, 0.5, 0.75)");
  app->add_option("--packet", f.packet, "CBR packet size in bits");
  app->add_option("--slots", f.slots, "simulated slots");
  app->add_option("--seed", f.seed, "seed of the first replication");
  app->add_option("--hysteresis-db", f.hysteresis_db, "handover hysteresis");
  app->add_option("--reps", f.reps, "replications")->check(CLI::PositiveNumber);
  app->add_option("--jobs", f.jobs, "parallel workers (0: all cores)");
  app->add_option("--out", f.out, "output directory")->required();
  app->add_flag("--dump-links", f.dump_links, "write links.csv");
  app->add_flag("--dump-grants", f.dump_grants, "write grants.csv");
  app->add_option("--admission-policy", f.admission, "pedestrian admission to mobile cells: off | on")
      ->check(CLI::IsMember({"off", "on"}));
  app->add_option("--mcs-table", f.mcs_table, "MCS table CSV");
  app->add_flag("--no-preemptive-bsr", f.no_bsr, "forward UL on buffered data only");
  app->add_flag("--discard-inflight", f.discard_inflight, "drop DL data held at the old parent on handover");
}

miab::RunSpec make_spec(const CommonFlags& f) {
  miab::ScenarioConfig cfg = f.config_path.empty() ? miab::ScenarioConfig{} : miab::load_config(f.config_path);
  if (f.scenario) cfg.scenario_kind = miab::scenario_kind_from_string(*f.scenario);
  if (f.passengers) cfg.passenger_fraction = *f.passengers;
  if (f.packet) cfg.cbr_packet_bits = *f.packet;
  if (f.slots) cfg.duration_slots = *f.slots;
  if (f.seed) cfg.seed = *f.seed;
  if (f.hysteresis_db) cfg.handover_hysteresis_db = *f.hysteresis_db;
  miab::validate(cfg);
  miab::RunSpec spec;
  spec.config = cfg;
  spec.seed_base = cfg.seed;
  spec.replications = f.reps;
  spec.jobs = f.jobs;
  spec.out_dir = f.out;
  spec.options.dump_links = f.dump_links;
  spec.options.dump_grants = f.dump_grants;
  spec.options.admission.enabled = f.admission == "on";
  spec.options.preemptive_bsr = !f.no_bsr;
  spec.options.discard_inflight = f.discard_inflight;
  if (!f.mcs_table.empty()) spec.options.mcs_table = miab::McsTable::load(f.mcs_table);
  return spec;
}

int report(const std::vector<miab::RunOutcome>& outcomes) {
  for (const auto& o : outcomes) {
    if (!o.error.empty())
      std::fprintf(stderr, "run %s (seed %llu) failed: %s\n", o.dir.string().c_str(),
                   static_cast<unsigned long long>(o.seed), o.error.c_str());
    else if (o.audits.any())
      std::fprintf(stderr, "run %s (seed %llu): audit fired %s\n", o.dir.string().c_str(),
                   static_cast<unsigned long long>(o.seed), o.audits.to_json().dump().c_str());
    else
      std::printf("%s ok\n", o.dir.string().c_str());
  }
  return miab::exit_code(outcomes);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mobile IAB system-level simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags;
  auto* run = app.add_subcommand("run", "run one configuration");
  add_common(run, run_flags);

  auto* sweep = app.add_subcommand("sweep", "run the scenario x packet x passenger grid");
  add_common(sweep, sweep_flags);
  std::string grid = "paper";
  sweep->add_option("--grid", grid, "grid name")->check(CLI::IsMember({"paper"}));

  auto* merge = app.add_subcommand("merge", "pool the distributions of compatible runs");
  std::vector<std::string> merge_dirs;
  std::string merge_out;
  merge->add_option("dirs", merge_dirs, "run directories")->required();
  merge->add_option("--out", merge_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return report(miab::run_replications(make_spec(run_flags)));
    if (*sweep) {
      const miab::RunSpec base = make_spec(sweep_flags);
      std::vector<miab::RunSpec> specs;
      for (const auto& cfg : miab::experiment_grid(base.config)) {
        miab::RunSpec s = base;
        s.config = cfg;
        s.out_dir = base.out_dir / miab::grid_run_name(cfg);
        specs.push_back(s);
      }
      return report(miab::run_all(specs, base.jobs));
    }
    if (*merge) {
      std::vector<std::filesystem::path> dirs(merge_dirs.begin(), merge_dirs.end());
      miab::merge_runs(dirs, merge_out);
      std::printf("merged %zu runs into %s\n", dirs.size(), merge_out.c_str());
      return 0;
    }
  } catch (const miab::ValidationError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const miab::ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const miab::IncompatibleRuns& e) {
    std::fprintf(stderr, "incompatible runs: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

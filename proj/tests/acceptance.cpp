#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "miab/phy.hpp"
#include "miab/rng.hpp"
#include "miab/scheduler.hpp"
#include "miab/simulator.hpp"
#include "miab/tdd.hpp"
#include "oracles.hpp"

using namespace miab;
namespace fs = std::filesystem;

namespace {

struct RunStats {
  ScenarioConfig cfg;
  fs::path dir;
  CountHistogram passenger_dl_latency;
  std::int64_t max_queue_free{0};
  std::vector<double> passenger_dl_mbps;
  std::map<std::string, SinrHistograms> sinr;
  std::map<std::string, McsHistogram> mcs_dl;
  std::array<CountHistogram, 4> mt_effect;  // pedestrian silent/tx, passenger silent/tx
  CountHistogram donor_backhaul;
  AuditCounters audits;
  std::map<std::string, MetricStore::RoleCount> roles;
};

ScenarioConfig make(ScenarioKind k, double passengers, int bits, std::uint64_t seed, std::int64_t slots) {
  ScenarioConfig c;
  c.scenario_kind = k;
  c.passenger_fraction = passengers;
  c.cbr_packet_bits = bits;
  c.seed = seed;
  c.duration_slots = slots;
  return c;
}

RunStats run(const ScenarioConfig& cfg, const fs::path& dir) {
  std::fprintf(stderr, "  running %s seed %llu -> %s\n", std::string(to_string(cfg.scenario_kind)).c_str(),
               static_cast<unsigned long long>(cfg.seed), dir.string().c_str());
  Simulator sim(cfg);
  sim.run();
  fs::remove_all(dir);
  sim.export_to(dir);
  const MetricStore& m = sim.metrics();
  RunStats r;
  r.cfg = cfg;
  r.dir = dir;
  for (const auto& u : m.ues()) {
    if (u.kind != NodeKind::Passenger) continue;
    r.passenger_dl_latency.merge(u.latency_slots[0]);
    r.max_queue_free = std::max({r.max_queue_free, u.max_two_hop_latency[0], u.max_two_hop_latency[1]});
    r.passenger_dl_mbps.push_back(m.throughput_bps(u.id, Direction::Dl) / 1e6);
  }
  r.sinr = m.sinr();
  r.mcs_dl = m.mcs(Direction::Dl);
  r.mt_effect = {m.mt_effect(NodeKind::Pedestrian, false), m.mt_effect(NodeKind::Pedestrian, true),
                 m.mt_effect(NodeKind::Passenger, false), m.mt_effect(NodeKind::Passenger, true)};
  r.donor_backhaul = m.donor_backhaul_links();
  r.audits = m.audits;
  r.roles = m.role_counts();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double median_db(const CountHistogram& h) { return static_cast<double>(h.quantile(0.5)) / 10.0; }

struct Reporter {
  int failed = 0;
  std::ofstream log;
  void operator()(int id, bool ok, const std::string& detail) {
    char line[1024];
    std::snprintf(line, sizeof line, "%s criterion %d: %s", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::printf("%s\n", line);
    std::fflush(stdout);
    if (log) log << line << '\n';
    failed += !ok;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mIAB acceptance run"};
  fs::path work = "acceptance_runs";
  int seeds = 3;
  long long slots = 40000;
  app.add_option("--work", work, "directory for run exports");
  app.add_option("--seeds", seeds, "seeds per configuration")->check(CLI::PositiveNumber);
  app.add_option("--slots", slots, "slots per run")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  Reporter report;
  report.log.open(work / "acceptance_summary.txt");

  struct Case {
    std::string tag;
    ScenarioKind kind;
    double passengers;
    int bits;
  };
  const std::vector<Case> cases{{"light", ScenarioKind::MIab, 0.25, 1024},
                                {"miab50", ScenarioKind::MIab, 0.50, 3072},
                                {"macros50", ScenarioKind::OnlyMacros, 0.50, 3072},
                                {"miab75", ScenarioKind::MIab, 0.75, 3072}};
  std::map<std::string, std::vector<RunStats>> runs;
  for (int s = 1; s <= seeds; ++s)
    for (const auto& c : cases) {
      const auto cfg = make(c.kind, c.passengers, c.bits, static_cast<std::uint64_t>(s), slots);
      runs[c.tag].push_back(run(cfg, work / fmt("%s_s%d", c.tag.c_str(), s)));
    }

  // 1. Usage fractions of each pattern row, from the tables and from the simulated slots.
  {
    struct Row {
      PatternRow row;
      int dl, ul;
      const char* from;
    };
    bool ok = true;
    std::string detail;
    for (const Row& r : {Row{PatternRow::MacroPico, 50, 50, "macros50"}, Row{PatternRow::IabDonor, 40, 30, "miab50"},
                         Row{PatternRow::IabBackhaul, 30, 30, "miab50"}, Row{PatternRow::IabNode, 40, 30, "miab50"}}) {
      const UsageFractions u = usage(builtin_pattern(r.row));
      ok = ok && u.dl_slots * 10 == r.dl && u.ul_slots * 10 == r.ul;
      const auto& rc = runs[r.from].front().roles.at(std::string(to_string(r.row)));
      const double dl = 100.0 * static_cast<double>(rc.dl) / static_cast<double>(rc.slots);
      const double ul = 100.0 * static_cast<double>(rc.ul) / static_cast<double>(rc.slots);
      ok = ok && rc.dl * 100 == rc.slots * r.dl && rc.ul * 100 == rc.slots * r.ul;
      detail += fmt("%s %.0f/%.0f/%.0f ", std::string(to_string(r.row)).c_str(), dl, ul, dl + ul);
    }
    report(1, ok, "DL/UL/total % " + detail);
  }

  // 2. Light load: passenger DL latency and the queue-free forwarding bound.
  {
    CountHistogram lat;
    std::int64_t max_free = 0;
    for (const auto& r : runs["light"]) {
      lat.merge(r.passenger_dl_latency);
      max_free = std::max(max_free, r.max_queue_free);
    }
    const double within = lat.fraction_at_most(8);
    report(2, within >= 0.99 && max_free == 8,
           fmt("passenger DL packets <= 2 ms: %.4f (need >= 0.99), max queue-free two-hop latency %lld slots (need 8)",
               within, static_cast<long long>(max_free)));
  }

  // 3. mIAB at 50% passengers, 3072-bit packets: passenger DL throughput.
  {
    int n = 0, good = 0;
    double worst = 1e9;
    for (const auto& r : runs["miab50"])
      for (double t : r.passenger_dl_mbps) {
        ++n;
        good += t >= 3.0;
        worst = std::min(worst, t);
      }
    const double f = static_cast<double>(good) / n;
    report(3, f >= 0.95, fmt("passengers with DL >= 3.0 Mbps: %.4f of %d (need >= 0.95), lowest %.3f Mbps", f, n, worst));
  }

  // 4. Only macros, same load: passengers starved and in low SNR.
  {
    int n = 0, below = 0;
    CountHistogram snr;
    for (const auto& r : runs["macros50"]) {
      for (double t : r.passenger_dl_mbps) {
        ++n;
        below += t < 3.0;
      }
      for (const auto& [cls, h] : r.sinr)
        if (cls.find("passenger_dl") != std::string::npos) snr.merge(h.snr);
    }
    const double fb = static_cast<double>(below) / n;
    const double low = snr.fraction_below(100);
    report(4, fb >= 0.5 && low >= 0.7,
           fmt("passengers below 3 Mbps: %.4f (need >= 0.5), passenger DL SNR samples < 10 dB: %.4f (need >= 0.7)", fb,
               low));
  }

  // 5. DU to passenger transmissions in the criterion-3 runs.
  {
    std::uint64_t total = 0, top = 0, errors = 0;
    int top_mcs = 0;
    for (const auto& r : runs["miab50"]) {
      const auto it = r.mcs_dl.find("miab_passenger");
      if (it == r.mcs_dl.end()) continue;
      const auto& h = it->second;
      top_mcs = static_cast<int>(h.success.size()) - 1;
      total += h.total();
      top += h.success[top_mcs] + h.error[top_mcs];
      for (auto e : h.error) errors += e;
    }
    const double ft = total ? static_cast<double>(top) / total : 0.0;
    const double fe = total ? static_cast<double>(errors) / total : 1.0;
    report(5, ft >= 0.8 && fe <= 0.02,
           fmt("at MCS %d: %.4f (need >= 0.8), error rate %.4f (need <= 0.02), %llu transmissions", top_mcs, ft, fe,
               static_cast<unsigned long long>(total)));
  }

  // 6. Co-located MT interference, samples pooled over every mIAB run and seed.
  {
    std::array<CountHistogram, 4> pooled;
    for (const auto* tag : {"light", "miab50", "miab75"})
      for (const auto& r : runs[tag])
        for (int i = 0; i < 4; ++i) pooled[i].merge(r.mt_effect[i]);
    bool have = true;
    for (const auto& h : pooled) have = have && !h.empty();
    if (!have) {
      report(6, false, "no DU-served pedestrian or passenger samples in one of the MT states");
    } else {
      const double ped = median_db(pooled[0]) - median_db(pooled[1]);
      const double pax = std::abs(median_db(pooled[2]) - median_db(pooled[3]));
      report(6, ped >= 10.0 && pax <= 3.0,
             fmt("pedestrian median SINR drop %.1f dB (need >= 10, n=%llu silent/%llu transmitting), passenger "
                 "contrast %.1f dB (need <= 3)",
                 ped, static_cast<unsigned long long>(pooled[0].total()),
                 static_cast<unsigned long long>(pooled[1].total()), pax));
    }
  }

  // 7. Donor load at 75% passengers: backhaul-served counts sit near multiples of 9.
  {
    CountHistogram h;
    for (const auto& r : runs["miab75"]) h.merge(r.donor_backhaul);
    std::uint64_t near = 0, near_nonzero = 0, nonzero = 0;
    for (const auto& [k, n] : h.counts()) {
      const std::int64_t rem = k % 9;
      const bool close = std::min(rem, 9 - rem) <= 2;
      near += close ? n : 0;
      if (k > 0) {
        nonzero += n;
        near_nonzero += close ? n : 0;
      }
    }
    const double f = h.total() ? static_cast<double>(near) / h.total() : 0.0;
    report(7, f >= 0.8,
           fmt("mass within +-2 of a multiple of 9: %.4f (need >= 0.8); excluding empty donors %.4f", f,
               nonzero ? static_cast<double>(near_nonzero) / nonzero : 0.0));
  }

  // 8. Outer loop on stationary links.
  {
    const McsTable table = McsTable::standard();
    Rng rng(808);
    double worst = 0;
    std::string detail;
    for (double sinr : {3.0, 12.3, 19.0}) {
      OuterLoop loop;
      const OuterLoopKey key{NodeId{0}, NodeId{1}, Direction::Dl};
      int errors = 0;
      const int n = 100000;
      for (int i = 0; i < n; ++i) {
        const TxOutcome out = realize_transmission(table, table.select(sinr, loop.offset(key)), sinr, rng);
        errors += out == TxOutcome::Error;
        loop.update(key, out);
      }
      const double rate = errors / static_cast<double>(n);
      worst = std::max(worst, std::abs(rate - 0.10));
      detail += fmt("%.1f dB: %.4f ", sinr, rate);
    }
    report(8, worst <= 0.02, "error rate over 1e5 transmissions at " + detail + "(need 0.10 +- 0.02)");
  }

  // 9. Oracles and audits.
  {
    const double pl = oracle::pathloss_worst_error(10000, 99);

    const McsTable table = McsTable::standard();
    Rng rng(909);
    int capacity_violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int dim = trial % 2 ? 8 : 16;
      Eigen::MatrixXcd h(dim, dim);
      for (int c = 0; c < dim; ++c)
        for (int r = 0; r < dim; ++r) h(r, c) = rng.complex_normal();
      const double p = std::pow(10.0, (rng.uniform() * 50.0 - 15.0) / 10.0);
      const StreamSet s = backhaul_streams(h, p, 1.0, table);
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
      std::vector<double> g;
      for (int i = 0; i < svd.singularValues().size(); ++i) g.push_back(std::pow(svd.singularValues()[i], 2));
      double cap = 0;
      for (double x : s.sinr_db) cap += std::log2(1.0 + std::pow(10.0, x / 10.0));
      capacity_violations += cap > oracle::waterfilling_capacity(g, p, 1.0) + 1e-9;
    }

    int rr_mismatch = 0;
    long long rr_audit = 0;
    for (int trial = 0; trial < 2000; ++trial) {
      std::vector<BearerDemand> d(1 + rng.below(8));
      std::uint32_t id = 0;
      for (auto& x : d) {
        x.bearer_id = id += 1 + static_cast<std::uint32_t>(rng.below(3));
        x.backlog_bits = static_cast<std::int64_t>(rng.below(20000)) + 1;
        x.bits_per_rb = static_cast<std::int64_t>(rng.below(1200)) + 25;
        x.hol_arrival_slot = static_cast<std::int64_t>(rng.below(20));
        if (rng.uniform() < 0.5)
          x.last_served = {static_cast<std::int64_t>(rng.below(20)), static_cast<int>(rng.below(66))};
      }
      const auto g = schedule_rbs(20, d, 66);
      const auto ref = oracle::reference_rr(20, d, 66);
      bool same = g.size() == ref.size();
      for (std::size_t i = 0; same && i < g.size(); ++i)
        same = g[i].rb == ref[i].rb && g[i].bearer_id == ref[i].bearer_id;
      rr_mismatch += !same;
      rr_audit += count_schedule_violations(20, d, g, 66);
    }

    AuditCounters total;
    for (const auto& [tag, rs] : runs)
      for (const auto& r : rs) {
        total.half_duplex += r.audits.half_duplex;
        total.attachment_optimality += r.audits.attachment_optimality;
        total.mt_non_donor += r.audits.mt_non_donor;
        total.scheduler_rule += r.audits.scheduler_rule;
        total.conservation += r.audits.conservation;
        total.double_delivery += r.audits.double_delivery;
        total.latency_bound += r.audits.latency_bound;
      }
    const bool ok = pl <= 1e-9 && capacity_violations == 0 && rr_mismatch == 0 && rr_audit == 0 && !total.any();
    report(9, ok,
           fmt("pathloss worst gap %.2e over 1e4 cases, capacity above water-filling %d/1000, RR replay mismatches %d, "
               "RR audit %lld, run audits %s",
               pl, capacity_violations, rr_mismatch, rr_audit, total.to_json().dump().c_str()));
  }

  // 10. Reproducibility of the criterion-3 configuration.
  {
    const RunStats& first = runs["miab50"].front();
    const fs::path again = work / "miab50_s1_repeat";
    run(first.cfg, again);
    int files = 0, differing = 0;
    for (const auto& e : fs::directory_iterator(first.dir)) {
      ++files;
      const fs::path other = again / e.path().filename();
      differing += !fs::exists(other) || slurp(e.path()) != slurp(other);
    }
    int extra = 0;
    for (const auto& e : fs::directory_iterator(again)) extra += !fs::exists(first.dir / e.path().filename());
    report(10, files > 0 && differing == 0 && extra == 0,
           fmt("%d export files compared, %d differ, %d unmatched", files, differing, extra));
  }

  std::printf("%d of 10 criteria failed\n", report.failed);
  return report.failed ? 1 : 0;
}

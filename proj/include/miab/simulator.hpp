#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "miab/channel.hpp"
#include "miab/config.hpp"
#include "miab/geometry.hpp"
#include "miab/metrics.hpp"
#include "miab/phy.hpp"
#include "miab/rng.hpp"
#include "miab/scenario.hpp"
#include "miab/scheduler.hpp"
#include "miab/tdd.hpp"
#include "miab/topology.hpp"
#include "miab/traffic.hpp"

namespace miab {

struct SimOptions {
  std::int64_t warmup_slots{20};
  int epoch_slots{10};
  bool fast_fading{true};
  bool preemptive_bsr{true};
  // Drop DL packets held at the old parent on handover or migration instead of re-routing them.
  bool discard_inflight{false};
  AdmissionPolicy admission;
  McsTable mcs_table = McsTable::standard();
  // Trace files are written here when set.
  std::optional<std::filesystem::path> dump_dir;
  bool dump_grants{false};
  bool dump_links{false};

  nlohmann::json to_json() const;
};

// One replication: owns the scenario, channel, queues and collectors, and
// advances them slot by slot.
class Simulator {
 public:
  Simulator(const ScenarioConfig& cfg, SimOptions opts = {});
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  void step();
  // Runs the remaining slots and closes the books (censoring, conservation).
  void run();
  void finish();

  std::int64_t slot() const { return slot_; }
  const Scenario& scenario() const { return scenario_; }
  const MetricStore& metrics() const { return metrics_; }
  const AttachmentTable& attachments() const { return table_; }
  const ChannelModel& channel() const { return channel_; }
  const std::vector<AttachmentEvent>& events() const { return events_; }
  long long handovers() const { return handovers_; }
  long long migrations() const { return migrations_; }
  // Bits waiting in all queues per direction.
  std::array<std::int64_t, 2> queued_bits() const;

  nlohmann::json manifest() const;
  void export_to(const std::filesystem::path& dir) const;

 private:
  struct Transmission;

  void move_nodes();
  void build_world();
  void update_topology();
  void attach_ue(NodeId ue, NodeId cell, double old_rsrp, double new_rsrp);
  void rebuild_served_lists();
  void schedule_cell(NodeId cell, SlotRole access, SlotRole backhaul, std::vector<Transmission>& out);
  void execute(std::vector<Transmission>& txs);
  void forward(const Transmission& t, std::vector<Packet> done);
  void deliver(Packet& p, bool two_hop);
  void route_dl(Packet p, std::int64_t arrival, std::int64_t eligible);
  void inject_traffic();

  double la_estimate_db(const OuterLoopKey& key, NodeId tx, NodeId rx);
  std::vector<double> backhaul_gains(NodeId donor, NodeId mt);
  std::string access_class(NodeId cell, NodeId ue) const;

  ScenarioConfig cfg_;
  SimOptions opts_;
  Scenario scenario_;
  ChannelModel channel_;
  MetricStore metrics_;
  AttachmentTable table_;
  OuterLoop outer_loop_;
  CbrGenerator traffic_;
  Rng mobility_rng_;
  Rng link_rng_;
  std::int64_t slot_{0};
  bool finished_{false};

  WorldState world_;
  std::vector<BearerQueue> dl_queue_;     // access hop, by UE
  std::vector<BearerQueue> ul_queue_;     // access hop, by UE
  std::vector<BearerQueue> bh_dl_queue_;  // waiting at the donor for the backhaul hop, by destination UE
  std::vector<BearerQueue> bh_ul_queue_;  // waiting at the MT for the backhaul hop, by source UE
  std::vector<std::vector<NodeId>> served_ues_;
  std::vector<std::vector<NodeId>> served_mts_;
  std::vector<DonorLinkProfile> donor_profiles_;
  std::vector<BearerQueue*> demanded_;  // bearers offered to the scheduler this slot
  std::map<OuterLoopKey, double> last_sinr_db_;
  std::map<OuterLoopKey, double> last_interference_mw_;
  std::map<OuterLoopKey, double> last_power_rb_mw_;
  std::vector<std::uint8_t> delivered_;
  std::vector<AttachmentEvent> events_;
  long long handovers_{0};
  long long migrations_{0};
  double noise_rb_mw_{0};

  std::unique_ptr<std::ofstream> grants_out_;
  std::unique_ptr<std::ofstream> links_out_;
};

}  // namespace miab

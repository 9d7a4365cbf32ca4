#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "miab/phy.hpp"
#include "miab/scenario.hpp"
#include "miab/scheduler.hpp"
#include "miab/topology.hpp"
#include "miab/types.hpp"

namespace miab {

class CountHistogram {
 public:
  void add(std::int64_t key, std::uint64_t n = 1) { counts_[key] += n; }
  void merge(const CountHistogram& o);
  std::uint64_t total() const;
  // Smallest key whose cumulative fraction reaches q (q in (0, 1]).
  std::int64_t quantile(double q) const;
  double fraction_at_most(std::int64_t key) const;
  double fraction_below(std::int64_t key) const;
  bool empty() const { return counts_.empty(); }
  const std::map<std::int64_t, std::uint64_t>& counts() const { return counts_; }

 private:
  std::map<std::int64_t, std::uint64_t> counts_;
};

inline int dir_index(Direction d) { return d == Direction::Dl ? 0 : 1; }

struct UeRecord {
  NodeId id;
  NodeKind kind{NodeKind::Pedestrian};
  std::array<std::int64_t, 2> window_bits{};
  std::array<std::uint64_t, 2> delivered_packets{};
  std::array<std::uint64_t, 2> censored_packets{};
  std::array<CountHistogram, 2> latency_slots;
  // Largest two-hop latency among packets that never waited for a free resource.
  std::array<std::int64_t, 2> max_two_hop_latency{};
};

struct McsHistogram {
  std::vector<std::uint64_t> success;
  std::vector<std::uint64_t> error;
  std::uint64_t total() const;
};

struct AuditCounters {
  long long half_duplex{0};
  long long attachment_optimality{0};
  long long mt_non_donor{0};
  long long scheduler_rule{0};
  long long conservation{0};
  long long double_delivery{0};
  long long latency_bound{0};
  bool any() const {
    return half_duplex || attachment_optimality || mt_non_donor || scheduler_rule || conservation ||
           double_delivery || latency_bound;
  }
  nlohmann::json to_json() const;
};

// Per-class SINR/SNR sample streams quantized to 0.1 dB.
struct SinrHistograms {
  CountHistogram sinr;
  CountHistogram snr;
};

inline std::int64_t quantize_db(double v) { return static_cast<std::int64_t>(std::llround(v * 10.0)); }

class MetricStore {
 public:
  MetricStore(const Scenario& scenario, std::int64_t warmup_slots, int mcs_levels);

  std::int64_t warmup_slots() const { return warmup_; }
  bool in_window(std::int64_t slot) const { return slot >= warmup_; }

  void on_generated(const Packet& p);
  // Throws DoubleDelivery if the packet was already delivered.
  void on_delivered(Packet& p, std::int64_t slot, bool two_hop);
  void on_dropped(const Packet& p);
  void on_censored(const Packet& p);
  void on_transmission(const std::string& link_class, Direction d, int mcs, TxOutcome outcome, std::int64_t slot);
  void on_sinr(const std::string& link_class, double sinr_db, double snr_db, std::int64_t slot);
  // DU-served DL samples split by whether the co-located MT transmits in the slot.
  void on_mt_effect(NodeKind ue_kind, bool mt_transmitting, double sinr_db, std::int64_t slot);
  void on_donor_profile(const DonorLinkProfile& p, std::int64_t slot);
  void on_role(const std::string& row, bool dl, bool ul);

  const UeRecord& ue(NodeId id) const { return ues_.at(ue_index_.at(id.value)); }
  const std::vector<UeRecord>& ues() const { return ues_; }
  double throughput_bps(NodeId ue, Direction d) const;
  double window_s() const;

  const std::map<std::string, SinrHistograms>& sinr() const { return sinr_; }
  const std::map<std::string, McsHistogram>& mcs(Direction d) const { return mcs_[dir_index(d)]; }
  const CountHistogram& mt_effect(NodeKind ue_kind, bool mt_transmitting) const;
  const CountHistogram& donor_total_links() const { return donor_total_; }
  const CountHistogram& donor_backhaul_links() const { return donor_backhaul_; }
  const CountHistogram& donor_direct_links() const { return donor_direct_; }
  double mean_access_fraction() const;
  // Slots in which a pattern row was DL / UL / active, for the usage audit.
  struct RoleCount {
    std::int64_t slots{0}, dl{0}, ul{0};
  };
  const std::map<std::string, RoleCount>& role_counts() const { return roles_; }

  std::array<std::int64_t, 2> generated_bits{};
  std::array<std::int64_t, 2> delivered_bits{};
  std::array<std::int64_t, 2> dropped_bits{};
  std::array<std::uint64_t, 2> generated_packets{};
  std::array<std::uint64_t, 2> delivered_packets{};
  AuditCounters audits;

  // Writes all export files; `manifest` is stored as manifest.json.
  void export_to(const std::filesystem::path& dir, const nlohmann::json& manifest) const;

 private:
  const Scenario* scenario_;
  std::int64_t warmup_;
  int mcs_levels_;
  std::vector<UeRecord> ues_;
  std::vector<int> ue_index_;
  std::map<std::string, SinrHistograms> sinr_;
  std::array<std::map<std::string, McsHistogram>, 2> mcs_;
  std::array<CountHistogram, 4> mt_effect_;
  CountHistogram donor_total_, donor_backhaul_, donor_direct_;
  double access_fraction_sum_{0};
  std::int64_t access_fraction_n_{0};
  std::map<std::string, RoleCount> roles_;
};

// Sums the count columns of the pooled files of compatible run directories.
void merge_runs(const std::vector<std::filesystem::path>& dirs, const std::filesystem::path& out);

// Text helpers shared by exporters.
std::string format_double(double v, int decimals);

}  // namespace miab

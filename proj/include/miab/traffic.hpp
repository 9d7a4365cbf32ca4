#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "miab/config.hpp"
#include "miab/rng.hpp"
#include "miab/scheduler.hpp"
#include "miab/types.hpp"

namespace miab {

// Constant-bit-rate sources, one DL and one UL flow per UE. Packets are
// produced at the end of a slot and become schedulable in the next one. Each
// UE's phase is drawn once among the even slot offsets of the inter-arrival
// period, so generation stays aligned with the odd-numbered frame slots.
class CbrGenerator {
 public:
  CbrGenerator(std::span<const NodeId> ues, const ScenarioConfig& cfg, Rng& rng);

  int phase(std::size_t ue_index) const { return phases_[ue_index]; }
  bool emits(std::size_t ue_index, std::int64_t slot) const;
  // DL packets carry destination = UE, UL packets source = UE.
  std::vector<Packet> generate(std::int64_t slot);

  double offered_load_bps() const;
  std::uint64_t packets_generated() const { return next_id_; }

 private:
  std::vector<NodeId> ues_;
  std::vector<int> phases_;
  int packet_bits_;
  int period_;
  double slot_s_;
  std::uint64_t next_id_{0};
};

}  // namespace miab

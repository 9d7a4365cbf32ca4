#include "miab/traffic.hpp"

namespace miab {

CbrGenerator::CbrGenerator(std::span<const NodeId> ues, const ScenarioConfig& cfg, Rng& rng)
    : ues_(ues.begin(), ues.end()),
      packet_bits_(cfg.cbr_packet_bits),
      period_(cfg.cbr_interarrival_slots),
      slot_s_(cfg.slot_s) {
  const int choices = (period_ + 1) / 2;
  for (std::size_t i = 0; i < ues_.size(); ++i) phases_.push_back(2 * static_cast<int>(rng.below(choices)));
}

bool CbrGenerator::emits(std::size_t i, std::int64_t slot) const {
  return slot >= phases_[i] && (slot - phases_[i]) % period_ == 0;
}

std::vector<Packet> CbrGenerator::generate(std::int64_t slot) {
  std::vector<Packet> out;
  for (std::size_t i = 0; i < ues_.size(); ++i) {
    if (!emits(i, slot)) continue;
    for (Direction d : {Direction::Dl, Direction::Ul}) {
      Packet p;
      p.id = next_id_++;
      p.size_bits = packet_bits_;
      p.direction = d;
      p.created_slot = slot;
      if (d == Direction::Dl)
        p.destination = ues_[i];
      else
        p.source = ues_[i];
      out.push_back(p);
    }
  }
  return out;
}

double CbrGenerator::offered_load_bps() const { return packet_bits_ / (period_ * slot_s_); }

}  // namespace miab

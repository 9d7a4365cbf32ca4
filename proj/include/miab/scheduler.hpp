#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "miab/types.hpp"

namespace miab {

struct Packet {
  std::uint64_t id{0};
  std::int32_t size_bits{0};
  Direction direction{Direction::Dl};
  NodeId source{kNoNode};
  NodeId destination{kNoNode};
  std::int64_t created_slot{0};
  std::int64_t delivered_slot{-1};
  std::array<NodeId, 6> hops{};
  std::uint8_t hop_count{0};
  // Set once the packet waited in a slot where its link could have carried it.
  bool delayed{false};

  void add_hop(NodeId n) {
    if (hop_count < hops.size()) hops[hop_count++] = n;
  }
};

// Scheduling instant: slot plus the RB position inside the slot; -1 marks the
// slot boundary, before any RB of that slot.
struct SchedTime {
  std::int64_t slot{-1};
  std::int32_t seq{-1};
  auto operator<=>(const SchedTime&) const = default;
};

struct QueuedPacket {
  Packet packet;
  std::int64_t arrival_slot{0};
  std::int64_t eligible_slot{0};
};

// FIFO of packets waiting on one link; a partially sent head keeps its
// remaining bits at the front.
class BearerQueue {
 public:
  void push(QueuedPacket p);
  // Keeps arrival order; used when packets are re-routed into this queue.
  void insert_by_arrival(QueuedPacket p);

  // Bits of the eligible prefix of the queue at `slot`.
  std::int64_t eligible_bits(std::int64_t slot);
  std::optional<std::int64_t> head_arrival() const;
  // Serves up to `bits` from the head; returns packets completed by it.
  std::vector<Packet> consume(std::int64_t bits);
  std::deque<QueuedPacket> drain();
  // Flags every packet of the eligible prefix at `slot` as delayed.
  void mark_delayed(std::int64_t slot);

  std::int64_t total_bits() const { return total_bits_; }
  std::size_t size() const { return packets_.size(); }
  bool empty() const { return packets_.empty(); }
  const std::deque<QueuedPacket>& packets() const { return packets_; }

  SchedTime last_served;

 private:
  std::deque<QueuedPacket> packets_;
  std::int64_t head_sent_bits_{0};
  std::int64_t total_bits_{0};
  std::size_t eligible_count_{0};
  std::int64_t eligible_bits_{0};
};

struct BearerDemand {
  std::uint32_t bearer_id{0};
  std::int64_t backlog_bits{0};
  std::int64_t bits_per_rb{0};
  std::int64_t hol_arrival_slot{0};
  SchedTime last_served;
};

// Reference instant from which a bearer's waiting time is measured: the later
// of its head-of-line arrival and its last RB grant.
SchedTime waiting_reference(const BearerDemand& d);

struct RbGrant {
  int rb{0};
  std::uint32_t bearer_id{0};
};

// Round robin: each RB in turn goes to the backlogged bearer that has waited
// longest (earliest waiting reference), ties by ascending id; backlog is
// reduced by the bits the RB carries.
std::vector<RbGrant> schedule_rbs(std::int64_t slot, std::span<const BearerDemand> demands, int num_rbs);

// Replays a grant list and counts assignments that violate the max-waiting
// rule or leave an RB idle while some bearer is still backlogged.
int count_schedule_violations(std::int64_t slot, std::span<const BearerDemand> demands,
                              std::span<const RbGrant> grants, int num_rbs);

}  // namespace miab

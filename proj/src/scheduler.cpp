#include "miab/scheduler.hpp"

#include <algorithm>

namespace miab {

void BearerQueue::push(QueuedPacket p) {
  total_bits_ += p.packet.size_bits;
  packets_.push_back(std::move(p));
}

void BearerQueue::insert_by_arrival(QueuedPacket p) {
  total_bits_ += p.packet.size_bits;
  // Never displace a partially sent head.
  auto begin = packets_.begin();
  if (head_sent_bits_ > 0 && begin != packets_.end()) ++begin;
  auto it = std::upper_bound(begin, packets_.end(), p.arrival_slot,
                             [](std::int64_t a, const QueuedPacket& q) { return a < q.arrival_slot; });
  packets_.insert(it, std::move(p));
  eligible_count_ = 0;
  eligible_bits_ = 0;
}

std::int64_t BearerQueue::eligible_bits(std::int64_t slot) {
  while (eligible_count_ < packets_.size() && packets_[eligible_count_].eligible_slot <= slot) {
    eligible_bits_ += packets_[eligible_count_].packet.size_bits;
    ++eligible_count_;
  }
  return eligible_count_ > 0 ? eligible_bits_ - head_sent_bits_ : 0;
}

std::optional<std::int64_t> BearerQueue::head_arrival() const {
  if (packets_.empty()) return std::nullopt;
  return packets_.front().arrival_slot;
}

std::vector<Packet> BearerQueue::consume(std::int64_t bits) {
  std::vector<Packet> done;
  while (bits > 0 && !packets_.empty()) {
    auto& head = packets_.front();
    const std::int64_t left = head.packet.size_bits - head_sent_bits_;
    if (bits < left) {
      head_sent_bits_ += bits;
      total_bits_ -= bits;
      return done;
    }
    bits -= left;
    total_bits_ -= left;
    head_sent_bits_ = 0;
    if (eligible_count_ > 0) {
      --eligible_count_;
      eligible_bits_ -= head.packet.size_bits;
    }
    done.push_back(head.packet);
    packets_.pop_front();
  }
  return done;
}

std::deque<QueuedPacket> BearerQueue::drain() {
  std::deque<QueuedPacket> out;
  out.swap(packets_);
  // A partially sent head restarts from its full size on the new path; its
  // already transmitted bits were never delivered.
  head_sent_bits_ = 0;
  total_bits_ = 0;
  eligible_count_ = 0;
  eligible_bits_ = 0;
  return out;
}

void BearerQueue::mark_delayed(std::int64_t slot) {
  for (auto& q : packets_) {
    if (q.eligible_slot > slot) break;
    q.packet.delayed = true;
  }
}

SchedTime waiting_reference(const BearerDemand& d) {
  return std::max(SchedTime{d.hol_arrival_slot, -1}, d.last_served);
}

namespace {

struct Claim {
  std::uint32_t id;
  std::int64_t backlog;
  std::int64_t bits_per_rb;
  SchedTime ref;
};

std::vector<Claim> claims_of(std::span<const BearerDemand> demands) {
  std::vector<Claim> c;
  for (const auto& d : demands)
    if (d.backlog_bits > 0 && d.bits_per_rb > 0) c.push_back({d.bearer_id, d.backlog_bits, d.bits_per_rb, waiting_reference(d)});
  return c;
}

}  // namespace

std::vector<RbGrant> schedule_rbs(std::int64_t slot, std::span<const BearerDemand> demands, int num_rbs) {
  std::vector<Claim> claims = claims_of(demands);
  std::vector<RbGrant> grants;
  for (int rb = 0; rb < num_rbs; ++rb) {
    Claim* best = nullptr;
    for (auto& c : claims) {
      if (c.backlog <= 0) continue;
      if (!best || c.ref < best->ref || (c.ref == best->ref && c.id < best->id)) best = &c;
    }
    if (!best) break;
    grants.push_back({rb, best->id});
    best->backlog -= best->bits_per_rb;
    best->ref = SchedTime{slot, rb};
  }
  return grants;
}

int count_schedule_violations(std::int64_t slot, std::span<const BearerDemand> demands,
                              std::span<const RbGrant> grants, int num_rbs) {
  std::vector<Claim> claims = claims_of(demands);
  int violations = 0;
  std::size_t g = 0;
  for (int rb = 0; rb < num_rbs; ++rb) {
    const bool backlogged = std::any_of(claims.begin(), claims.end(), [](const Claim& c) { return c.backlog > 0; });
    if (g >= grants.size() || grants[g].rb != rb) {
      if (backlogged) ++violations;
      continue;
    }
    const auto& grant = grants[g++];
    auto it = std::find_if(claims.begin(), claims.end(), [&](const Claim& c) { return c.id == grant.bearer_id; });
    if (it == claims.end() || it->backlog <= 0) {
      ++violations;
      continue;
    }
    for (const auto& c : claims)
      if (c.backlog > 0 && &c != &*it && (c.ref < it->ref || (c.ref == it->ref && c.id < it->id))) {
        ++violations;
        break;
      }
    it->backlog -= it->bits_per_rb;
    it->ref = SchedTime{slot, rb};
  }
  if (g != grants.size()) ++violations;
  return violations;
}

}  // namespace miab

#pragma once

#include <compare>
#include <cstdint>
#include <string_view>

namespace miab {

struct NodeId {
  std::uint32_t value{0};
  auto operator<=>(const NodeId&) const = default;
};
inline constexpr NodeId kNoNode{0xFFFFFFFFu};

struct BusId {
  std::uint32_t value{0};
  auto operator<=>(const BusId&) const = default;
};

enum class NodeKind : std::uint8_t { IabDonor, PicoGnb, MIabDu, MIabMt, Pedestrian, Passenger };
enum class Direction : std::uint8_t { Dl, Ul };

constexpr bool is_cell(NodeKind k) {
  return k == NodeKind::IabDonor || k == NodeKind::PicoGnb || k == NodeKind::MIabDu;
}
constexpr bool is_ue(NodeKind k) { return k == NodeKind::Pedestrian || k == NodeKind::Passenger; }

std::string_view to_string(NodeKind k);
std::string_view to_string(Direction d);

}  // namespace miab

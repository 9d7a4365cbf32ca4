#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace miab {

enum class SlotRole : std::uint8_t { Dl, Ul, Silent };
enum class PatternRow : std::uint8_t { MacroPico, IabDonor, IabBackhaul, IabNode };

struct TddCell {
  SlotRole role{SlotRole::Silent};
  bool special{false};  // S slot, used for DL
};

// 10-slot frame; column k of the published tables is slot index k-1.
struct TddPattern {
  std::array<TddCell, 10> cells;
};

const TddPattern& builtin_pattern(PatternRow row);
std::string_view to_string(PatternRow row);
std::string_view to_string(SlotRole r);

// `slot` is a global 0-based slot counter, taken mod 10.
SlotRole slot_role(const TddPattern& pattern, std::int64_t slot);
SlotRole slot_role(PatternRow row, std::int64_t slot);

struct UsageFractions {
  int dl_slots{0};
  int ul_slots{0};
  double dl() const { return dl_slots / 10.0; }
  double ul() const { return ul_slots / 10.0; }
  double active() const { return (dl_slots + ul_slots) / 10.0; }
};
UsageFractions usage(const TddPattern& pattern);

enum class ResourceAttr : std::uint8_t { Hard, Unavailable };

// Resource attributes a parent configures for its child DU: silent slots of
// the node row are unavailable, everything else is hard.
std::array<ResourceAttr, 10> du_resource_attributes(const TddPattern& node_row);

// Backhaul role describes the MT (DL = MT receives), access role the DU
// (DL = DU transmits). True if one part would transmit while the other receives.
bool half_duplex_conflict(SlotRole backhaul_role, SlotRole access_role);

// First slot strictly after `after` whose role equals `role`.
std::int64_t next_slot_with_role(PatternRow row, std::int64_t after, SlotRole role);

}  // namespace miab

#include "miab/tdd.hpp"

#include <stdexcept>

namespace miab {

namespace {

constexpr TddCell D{SlotRole::Dl, false};
constexpr TddCell S{SlotRole::Dl, true};
constexpr TddCell U{SlotRole::Ul, false};
constexpr TddCell X{SlotRole::Silent, false};

constexpr TddPattern kMacroPico{{D, S, U, U, U, D, S, U, U, D}};
constexpr TddPattern kIabDonor{{D, U, X, D, X, U, D, X, U, D}};
constexpr TddPattern kIabBackhaul{{D, X, U, D, U, X, X, U, X, D}};
constexpr TddPattern kIabNode{{X, U, D, X, D, U, D, D, U, X}};

}  // namespace

const TddPattern& builtin_pattern(PatternRow row) {
  switch (row) {
    case PatternRow::MacroPico: return kMacroPico;
    case PatternRow::IabDonor: return kIabDonor;
    case PatternRow::IabBackhaul: return kIabBackhaul;
    case PatternRow::IabNode: return kIabNode;
  }
  throw std::invalid_argument("unknown pattern row");
}

std::string_view to_string(PatternRow row) {
  switch (row) {
    case PatternRow::MacroPico: return "macro_pico";
    case PatternRow::IabDonor: return "iab_donor";
    case PatternRow::IabBackhaul: return "iab_backhaul";
    case PatternRow::IabNode: return "iab_node";
  }
  return "?";
}

std::string_view to_string(SlotRole r) {
  switch (r) {
    case SlotRole::Dl: return "DL";
    case SlotRole::Ul: return "UL";
    case SlotRole::Silent: return "-";
  }
  return "?";
}

SlotRole slot_role(const TddPattern& p, std::int64_t slot) {
  const std::int64_t k = ((slot % 10) + 10) % 10;
  return p.cells[static_cast<std::size_t>(k)].role;
}

SlotRole slot_role(PatternRow row, std::int64_t slot) { return slot_role(builtin_pattern(row), slot); }

UsageFractions usage(const TddPattern& p) {
  UsageFractions u;
  for (const auto& c : p.cells) {
    if (c.role == SlotRole::Dl) ++u.dl_slots;
    if (c.role == SlotRole::Ul) ++u.ul_slots;
  }
  return u;
}

std::array<ResourceAttr, 10> du_resource_attributes(const TddPattern& node_row) {
  std::array<ResourceAttr, 10> out{};
  for (std::size_t k = 0; k < 10; ++k)
    out[k] = node_row.cells[k].role == SlotRole::Silent ? ResourceAttr::Unavailable : ResourceAttr::Hard;
  return out;
}

bool half_duplex_conflict(SlotRole backhaul, SlotRole access) {
  const bool mt_rx = backhaul == SlotRole::Dl, mt_tx = backhaul == SlotRole::Ul;
  const bool du_tx = access == SlotRole::Dl, du_rx = access == SlotRole::Ul;
  return (mt_rx && du_tx) || (mt_tx && du_rx);
}

std::int64_t next_slot_with_role(PatternRow row, std::int64_t after, SlotRole role) {
  for (std::int64_t s = after + 1; s <= after + 10; ++s)
    if (slot_role(row, s) == role) return s;
  throw std::invalid_argument("pattern row never has the requested role");
}

}  // namespace miab

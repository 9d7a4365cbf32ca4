#pragma once

#include <optional>
#include <string>
#include <vector>

#include "miab/antenna.hpp"
#include "miab/config.hpp"
#include "miab/geometry.hpp"
#include "miab/rng.hpp"
#include "miab/types.hpp"

namespace miab {

struct NodeDescriptor {
  NodeId id;
  NodeKind kind{NodeKind::Pedestrian};
  double height_m{0};
  double tx_power_dbm{0};
  double tilt_deg{0};
  ArrayType array{ArrayType::SingleAntenna};
  ElementPattern element_pattern{ElementPattern::Omni};
  double max_element_gain_dbi{0};
  double speed_kmh{0};
  std::optional<BusId> bus_id;

  bool operator==(const NodeDescriptor&) const = default;
};

// Fixed radio parameters per entity kind.
NodeDescriptor entity_defaults(NodeKind kind);

struct BusGeometry {
  double length_m{12.0};
  double width_m{2.5};
  double height_m{3.2};
};

// Offsets in the bus frame (x forward, origin at the body center on the ground).
inline constexpr Vec3 kMtMount{-5.5, 0.0, 3.5};
inline constexpr Vec3 kDuMount{-5.5, 0.0, 2.5};
std::vector<Vec3> seat_offsets();

struct BusNodes {
  NodeId du{kNoNode};
  NodeId mt{kNoNode};
  std::vector<NodeId> passengers;
};

struct Scenario {
  ScenarioConfig config;
  GridLayout layout;
  BusGeometry bus_geometry;
  std::vector<NodeDescriptor> nodes;
  // Per node: position of fixed cells, otherwise the initial position.
  std::vector<Vec3> initial_position;
  // Per node: panel pointing for fixed cells; bus-mounted nodes follow the bus.
  std::vector<Orientation> fixed_orientation;
  // Per node: offset in the bus frame for bus-mounted nodes.
  std::vector<Vec3> mount_offset;
  // Per node: index into pedestrian_tracks, or -1.
  std::vector<int> pedestrian_index;

  std::vector<MobileState> buses;
  std::vector<MobileState> pedestrian_tracks;
  std::vector<BusNodes> bus_nodes;

  std::vector<NodeId> donors;
  std::vector<NodeId> picos;
  std::vector<NodeId> ues;

  const NodeDescriptor& node(NodeId id) const { return nodes.at(id.value); }
  std::size_t size() const { return nodes.size(); }
};

Scenario build_scenario(const ScenarioConfig& cfg, Rng& rng);
Scenario build_scenario(const ScenarioConfig& cfg);

// Canonical text form, used to check reproducibility.
std::string serialize(const Scenario& s);

}  // namespace miab

#include "miab/scenario.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "miab/errors.hpp"

namespace miab {

namespace {
constexpr double kDeg = M_PI / 180.0;
}

std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::IabDonor: return "iab_donor";
    case NodeKind::PicoGnb: return "pico_gnb";
    case NodeKind::MIabDu: return "miab_du";
    case NodeKind::MIabMt: return "miab_mt";
    case NodeKind::Pedestrian: return "pedestrian";
    case NodeKind::Passenger: return "passenger";
  }
  return "?";
}

std::string_view to_string(Direction d) { return d == Direction::Dl ? "dl" : "ul"; }

NodeDescriptor entity_defaults(NodeKind kind) {
  NodeDescriptor d;
  d.kind = kind;
  switch (kind) {
    case NodeKind::IabDonor:
      d.height_m = 25.0, d.tx_power_dbm = 35.0, d.tilt_deg = 12.0;
      d.array = ArrayType::Ura8x8, d.element_pattern = ElementPattern::ThreeGpp3d;
      d.max_element_gain_dbi = 8.0, d.speed_kmh = 0.0;
      break;
    case NodeKind::PicoGnb:
      d.height_m = 10.0, d.tx_power_dbm = 24.0, d.tilt_deg = 10.0;
      d.array = ArrayType::Ura8x8, d.element_pattern = ElementPattern::ThreeGpp3d;
      d.max_element_gain_dbi = 8.0, d.speed_kmh = 0.0;
      break;
    case NodeKind::MIabDu:
      d.height_m = 2.5, d.tx_power_dbm = 24.0, d.tilt_deg = 4.0;
      d.array = ArrayType::Ura8x8, d.element_pattern = ElementPattern::ThreeGpp3d;
      d.max_element_gain_dbi = 8.0, d.speed_kmh = 40.0;
      break;
    case NodeKind::MIabMt:
      d.height_m = 3.5, d.tx_power_dbm = 24.0, d.tilt_deg = 0.0;
      d.array = ArrayType::Ula64, d.element_pattern = ElementPattern::Omni;
      d.max_element_gain_dbi = 0.0, d.speed_kmh = 40.0;
      break;
    case NodeKind::Pedestrian:
      d.height_m = 1.5, d.tx_power_dbm = 24.0, d.tilt_deg = 0.0;
      d.array = ArrayType::SingleAntenna, d.element_pattern = ElementPattern::Omni;
      d.max_element_gain_dbi = 0.0, d.speed_kmh = 3.0;
      break;
    case NodeKind::Passenger:
      d.height_m = 1.8, d.tx_power_dbm = 24.0, d.tilt_deg = 0.0;
      d.array = ArrayType::SingleAntenna, d.element_pattern = ElementPattern::Omni;
      d.max_element_gain_dbi = 0.0, d.speed_kmh = 40.0;
      break;
  }
  return d;
}

std::vector<Vec3> seat_offsets() {
  std::vector<Vec3> seats;
  for (int row = 0; row < 10; ++row)
    for (double side : {-0.6, 0.6}) seats.push_back({-4.5 + row, side, 1.8});
  return seats;
}

Scenario build_scenario(const ScenarioConfig& cfg, Rng& rng) {
  validate(cfg);
  Scenario s;
  s.config = cfg;

  auto add = [&](NodeKind kind, Vec3 pos, Orientation o = {}, Vec3 mount = {}) {
    NodeDescriptor d = entity_defaults(kind);
    d.id = NodeId{static_cast<std::uint32_t>(s.nodes.size())};
    s.nodes.push_back(d);
    s.initial_position.push_back(pos);
    s.fixed_orientation.push_back(o);
    s.mount_offset.push_back(mount);
    s.pedestrian_index.push_back(-1);
    return d.id;
  };

  // Macro sites at three corners of the central block, pointing outward 120 deg apart.
  const double corner = s.layout.block_side_m / 2;
  const struct {
    double x, y, az;
  } sites[3] = {{corner, corner, 30.0}, {-corner, corner, 150.0}, {corner, -corner, 270.0}};
  const double donor_tilt = entity_defaults(NodeKind::IabDonor).tilt_deg * kDeg;
  for (const auto& site : sites)
    s.donors.push_back(add(NodeKind::IabDonor, {site.x, site.y, 25.0}, {site.az * kDeg, donor_tilt}));

  if (cfg.scenario_kind == ScenarioKind::MacrosPicos) {
    const double tilt = entity_defaults(NodeKind::PicoGnb).tilt_deg * kDeg;
    for (int k = 0; k < 6; ++k) {
      const double a = k * 60.0 * kDeg;
      const Vec3 p{cfg.pico_ring_radius_m * std::cos(a), cfg.pico_ring_radius_m * std::sin(a), 10.0};
      s.picos.push_back(add(NodeKind::PicoGnb, p, {a, tilt}));
    }
  }

  const double bus_speed = entity_defaults(NodeKind::MIabDu).speed_kmh / 3.6;
  const double walk_speed = entity_defaults(NodeKind::Pedestrian).speed_kmh / 3.6;
  const auto seats = seat_offsets();

  for (int b = 0; b < cfg.num_buses; ++b) {
    s.buses.push_back(spawn_on_lane(s.layout, rng, bus_speed));
    s.bus_nodes.emplace_back();
  }
  auto mounted_position = [&](int bus, Vec3 mount) {
    const auto& st = s.buses[bus];
    Vec3 p = st.position + rotate_z({mount.x, mount.y, 0}, st.heading.angle());
    p.z = mount.z;
    return p;
  };
  if (cfg.scenario_kind == ScenarioKind::MIab) {
    for (int b = 0; b < cfg.num_buses; ++b) {
      const NodeId du = add(NodeKind::MIabDu, mounted_position(b, kDuMount), {}, kDuMount);
      const NodeId mt = add(NodeKind::MIabMt, mounted_position(b, kMtMount), {}, kMtMount);
      s.nodes[du.value].bus_id = BusId{static_cast<std::uint32_t>(b)};
      s.nodes[mt.value].bus_id = BusId{static_cast<std::uint32_t>(b)};
      s.bus_nodes[b].du = du;
      s.bus_nodes[b].mt = mt;
    }
  }

  const int per_bus = cfg.passengers_per_bus();
  for (int b = 0; b < cfg.num_buses; ++b) {
    std::vector<int> order(seats.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int k = 0; k < per_bus; ++k) {
      const Vec3 seat = seats[order[k]];
      const NodeId id = add(NodeKind::Passenger, mounted_position(b, seat), {}, seat);
      s.nodes[id.value].bus_id = BusId{static_cast<std::uint32_t>(b)};
      s.bus_nodes[b].passengers.push_back(id);
      s.ues.push_back(id);
    }
  }

  const double ped_h = entity_defaults(NodeKind::Pedestrian).height_m;
  for (int k = 0; k < cfg.num_pedestrians(); ++k) {
    MobileState st = spawn_on_sidewalk(s.layout, rng, walk_speed, ped_h);
    const NodeId id = add(NodeKind::Pedestrian, st.position);
    s.pedestrian_index[id.value] = static_cast<int>(s.pedestrian_tracks.size());
    s.pedestrian_tracks.push_back(st);
    s.ues.push_back(id);
  }

  const int passengers = static_cast<int>(std::count_if(
      s.nodes.begin(), s.nodes.end(), [](const NodeDescriptor& d) { return d.kind == NodeKind::Passenger; }));
  if (passengers != cfg.num_passengers() || static_cast<int>(s.ues.size()) != cfg.total_ues)
    throw ValidationError("total_ues", "materialized entity counts disagree with the configuration");
  return s;
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  Rng rng(cfg.seed, stream::kLayout);
  return build_scenario(cfg, rng);
}

std::string serialize(const Scenario& s) {
  nlohmann::json j;
  j["config"] = to_json(s.config);
  auto& nodes = j["nodes"];
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& d = s.nodes[i];
    const auto& p = s.initial_position[i];
    nodes.push_back({{"id", d.id.value},
                     {"kind", std::string(to_string(d.kind))},
                     {"height_m", d.height_m},
                     {"tx_power_dbm", d.tx_power_dbm},
                     {"tilt_deg", d.tilt_deg},
                     {"array", static_cast<int>(d.array)},
                     {"element", static_cast<int>(d.element_pattern)},
                     {"gain_dbi", d.max_element_gain_dbi},
                     {"speed_kmh", d.speed_kmh},
                     {"bus", d.bus_id ? static_cast<long long>(d.bus_id->value) : -1LL},
                     {"pos", {p.x, p.y, p.z}},
                     {"mount", {s.mount_offset[i].x, s.mount_offset[i].y, s.mount_offset[i].z}},
                     {"azimuth", s.fixed_orientation[i].azimuth_rad},
                     {"downtilt", s.fixed_orientation[i].downtilt_rad}});
  }
  for (const auto& b : s.buses)
    j["buses"].push_back({b.position.x, b.position.y, b.heading.dx, b.heading.dy, b.lane_offset_m});
  return j.dump();
}

}  // namespace miab

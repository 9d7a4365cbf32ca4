#pragma once

#include "miab/channel.hpp"
#include "miab/scenario.hpp"

namespace miab::test {

// Geometry of the scenario's initial placement, frozen.
inline WorldState static_world(const Scenario& s) {
  WorldState w;
  w.position = s.initial_position;
  w.velocity.assign(s.size(), {});
  w.orientation = s.fixed_orientation;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& d = s.nodes[i];
    if (d.bus_id) {
      const double ang = s.buses[d.bus_id->value].heading.angle();
      w.orientation[i] = {d.kind == NodeKind::MIabDu ? ang - M_PI / 2 : ang, d.tilt_deg * M_PI / 180.0};
    }
  }
  for (const auto& b : s.buses) {
    BusBody body;
    body.center = {b.position.x, b.position.y, 0.0};
    body.heading_rad = b.heading.angle();
    body.length_m = s.bus_geometry.length_m;
    body.width_m = s.bus_geometry.width_m;
    body.height_m = s.bus_geometry.height_m;
    w.bodies.push_back(body);
  }
  return w;
}

}  // namespace miab::test

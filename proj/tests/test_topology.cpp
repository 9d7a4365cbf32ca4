#include <doctest.h>

#include <cmath>
#include <vector>

#include "miab/errors.hpp"
#include "miab/scenario.hpp"
#include "miab/topology.hpp"

using namespace miab;

namespace {

Scenario miab_scenario(double passengers = 0.5) {
  ScenarioConfig c;
  c.scenario_kind = ScenarioKind::MIab;
  c.passenger_fraction = passengers;
  return build_scenario(c);
}

}  // namespace

TEST_SUITE("topology") {
  TEST_CASE("strongest cell wins, hysteresis keeps the serving cell") {
    const std::vector<Candidate> c{{NodeId{0}, -80.0}, {NodeId{1}, -78.0}, {NodeId{2}, -90.0}};
    CHECK(evaluate_attachment(std::nullopt, c, 0.0) == NodeId{1});
    CHECK(evaluate_attachment(NodeId{0}, c, 3.0) == NodeId{0});
    CHECK(evaluate_attachment(NodeId{0}, c, 1.0) == NodeId{1});
    // Exactly at the margin: stay.
    CHECK(evaluate_attachment(NodeId{0}, c, 2.0) == NodeId{0});
    // Serving cell no longer a candidate: move to the best.
    CHECK(evaluate_attachment(NodeId{7}, c, 10.0) == NodeId{1});
  }

  TEST_CASE("ties go to the lowest id") {
    const std::vector<Candidate> c{{NodeId{5}, -70.0}, {NodeId{2}, -70.0}, {NodeId{9}, -70.0}};
    CHECK(evaluate_attachment(std::nullopt, c, 0.0) == NodeId{2});
  }

  TEST_CASE("no candidate throws") {
    const std::vector<Candidate> none;
    CHECK_THROWS_AS(evaluate_attachment(std::nullopt, none, 0.0), NoCandidate);
  }

  TEST_CASE("initial table: donors and picos servable, only donors support IAB") {
    const Scenario s = miab_scenario();
    const AttachmentTable t(s);
    for (const auto& d : s.nodes) {
      CHECK(t.servable(d.id) == (d.kind == NodeKind::IabDonor || d.kind == NodeKind::PicoGnb));
      CHECK(t.iab_support(d.id) == (d.kind == NodeKind::IabDonor));
      CHECK(t.serving(d.id) == kNoNode);
    }
  }

  TEST_CASE("an MT never attaches to a DU or a pedestrian") {
    const Scenario s = miab_scenario();
    AttachmentTable t(s);
    const NodeId mt = s.bus_nodes[0].mt, du = s.bus_nodes[1].du;
    CHECK_THROWS_AS(t.attach(mt, du, 0), ConstraintViolation);
    CHECK_THROWS_AS(t.attach(s.ues.front(), s.ues.back(), 0), ConstraintViolation);
    t.attach(mt, s.donors[2], 0);
    CHECK(t.serving(mt) == s.donors[2]);
  }

  TEST_CASE("integration: donors only, IAB support required, DU becomes servable") {
    const Scenario s = miab_scenario();
    AttachmentTable t(s);
    const NodeId mt = s.bus_nodes[0].mt, du = s.bus_nodes[0].du;
    CHECK(mt_of_du(s, du) == mt);
    CHECK(du_of_mt(s, mt) == du);
    CHECK(mt_of_du(s, mt) == kNoNode);
    CHECK_FALSE(t.servable(du));
    // A DU of another bus heads the list but is not a donor.
    const std::vector<Candidate> c{
        {s.bus_nodes[1].du, -40.0}, {s.donors[0], -90.0}, {s.donors[1], -85.0}, {s.donors[2], -100.0}};
    t.set_iab_support(s.donors[1], false);
    CHECK(integrate_miab_node(t, s, mt, c, 12) == s.donors[0]);
    CHECK(t.serving(mt) == s.donors[0]);
    CHECK(t.servable(du));

    AttachmentTable none(s);
    for (NodeId d : s.donors) none.set_iab_support(d, false);
    CHECK_THROWS_AS(integrate_miab_node(none, s, mt, c, 0), NoCandidate);
  }

  TEST_CASE("routes through a DU have two hops, direct routes one") {
    const Scenario s = miab_scenario();
    AttachmentTable t(s);
    const auto& bus = s.bus_nodes[0];
    const NodeId passenger = bus.passengers.front();
    const NodeId ped = s.ues.back();
    t.attach(bus.mt, s.donors[1], 0);
    t.attach(passenger, bus.du, 0);
    t.attach(ped, s.donors[0], 0);

    const Route dl = dl_route(s, t, passenger);
    CHECK(dl.length() == 2);
    CHECK(dl.hops == std::vector<NodeId>{s.donors[1], bus.du, passenger});
    const Route ul = ul_route(s, t, passenger);
    CHECK(ul.hops == std::vector<NodeId>{passenger, bus.du, s.donors[1]});
    CHECK(anchor_of(s, t, passenger) == s.donors[1]);

    CHECK(dl_route(s, t, ped).length() == 1);
    CHECK(anchor_of(s, t, ped) == s.donors[0]);
    CHECK(dl_route(s, t, s.ues[1]).hops.empty());
  }

  TEST_CASE("donor link profile counts direct UEs, MTs and the UEs behind them") {
    const Scenario s = miab_scenario(0.75);
    AttachmentTable t(s);
    const NodeId donor = s.donors[0];
    t.attach(s.bus_nodes[0].mt, donor, 0);
    t.attach(s.bus_nodes[1].mt, donor, 0);
    t.attach(s.bus_nodes[2].mt, s.donors[1], 0);
    for (int b = 0; b < 3; ++b)
      for (NodeId p : s.bus_nodes[b].passengers) t.attach(p, s.bus_nodes[b].du, 0);
    int direct = 0;
    for (NodeId u : s.ues)
      if (t.serving(u) == kNoNode && direct < 4) {
        t.attach(u, donor, 0);
        ++direct;
      }
    const DonorLinkProfile p = donor_link_profile(s, t, donor);
    const int per_bus = s.config.passengers_per_bus();
    CHECK(p.direct_ues == 4);
    CHECK(p.attached_mts == 2);
    CHECK(p.backhaul_served_ues == 2 * per_bus);
    CHECK(p.total() == 4 + 2 * per_bus);
    CHECK(p.access_fraction() == doctest::Approx(4.0 / (4 + 2 * per_bus)));
    CHECK(t.served_by(s.bus_nodes[0].du).size() == static_cast<std::size_t>(per_bus));
  }

  TEST_CASE("admission to a mobile cell needs signal and dwell") {
    AdmissionPolicy off;
    CHECK(admit_to_mobile_cell(off, -150.0, 0.0));
    AdmissionPolicy on;
    on.enabled = true;
    CHECK(admit_to_mobile_cell(on, -90.0, 3.0));
    CHECK_FALSE(admit_to_mobile_cell(on, -96.0, 3.0));
    CHECK_FALSE(admit_to_mobile_cell(on, -90.0, 1.0));
  }

  TEST_CASE("expected dwell inside a disc") {
    // Relative speed 10 m/s along x from the center of a 25 m disc.
    CHECK(expected_dwell_s({0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {10, 0, 0}, 25.0) == doctest::Approx(2.5));
    CHECK(expected_dwell_s({30, 0, 0}, {}, {0, 0, 0}, {}, 25.0) == 0.0);
    CHECK(std::isinf(expected_dwell_s({1, 1, 0}, {3, 0, 0}, {0, 0, 0}, {3, 0, 0}, 25.0)));
    CHECK(expected_dwell_s({10, 0, 0}, {0, 0, 0}, {0, 0, 0}, {-5, 0, 0}, 25.0) == doctest::Approx(3.0));
  }
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "miab/config.hpp"
#include "miab/errors.hpp"
#include "miab/scenario.hpp"

using namespace miab;

namespace {

std::filesystem::path write_tmp(const std::string& name, const std::string& text) {
  std::filesystem::create_directories(MIAB_TEST_TMP);
  const auto p = std::filesystem::path(MIAB_TEST_TMP) / name;
  std::ofstream(p) << text;
  return p;
}

int count_kind(const Scenario& s, NodeKind k) {
  int n = 0;
  for (const auto& d : s.nodes) n += d.kind == k;
  return n;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("file with miab, half passengers, 3072-bit packets") {
    const auto p = write_tmp("c1.json",
                             R"({"scenario_kind": "miab", "passenger_fraction": 0.50, "cbr_packet_bits": 3072})");
    const ScenarioConfig c = load_config(p);
    CHECK(c.scenario_kind == ScenarioKind::MIab);
    CHECK(c.num_passengers() == 36);
    CHECK(c.passengers_per_bus() == 6);
    CHECK(c.cbr_packet_bits == 3072);
  }

  TEST_CASE("omitted keys take the defaults") {
    const ScenarioConfig c = parse_config("{}");
    CHECK(c.num_rbs == 66);
    CHECK(c.slot_s == doctest::Approx(0.25e-3));
    CHECK(c.scs_hz == doctest::Approx(60e3));
    CHECK(c.carrier_hz == doctest::Approx(28e9));
    CHECK(c.bandwidth_hz == doctest::Approx(50e6));
    CHECK(c.num_buses == 6);
    CHECK(c.total_ues == 72);
    CHECK(c.cbr_interarrival_slots == 4);
    CHECK(c.handover_hysteresis_db == 0.0);
  }

  TEST_CASE("passenger fraction 0.30 is rejected with its key") {
    try {
      parse_config(R"({"passenger_fraction": 0.30})");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(e.key == "passenger_fraction");
    }
  }

  TEST_CASE("passenger fractions of the experiment grid give 3, 6, 9 per bus") {
    for (auto [f, per_bus] : {std::pair{0.25, 3}, {0.50, 6}, {0.75, 9}}) {
      ScenarioConfig c;
      c.passenger_fraction = f;
      validate(c);
      CHECK(c.passengers_per_bus() == per_bus);
    }
  }

  TEST_CASE("other invariants") {
    CHECK_THROWS_AS(parse_config(R"({"duration_slots": 9})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"num_rbs": 70})"), ValidationError);  // 70*12*60k > 50 MHz
    CHECK_THROWS_AS(parse_config(R"({"no_such_key": 1})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"scenario_kind": "ferry"})"), ValidationError);
    CHECK_THROWS_AS(parse_config("{not json"), ParseError);
    CHECK_THROWS_AS(parse_config("[1, 2]"), ParseError);
    CHECK_THROWS_AS(load_config(std::filesystem::path(MIAB_TEST_TMP) / "missing.json"), ParseError);
  }

  TEST_CASE("json round trip") {
    ScenarioConfig c;
    c.scenario_kind = ScenarioKind::MacrosPicos;
    c.seed = 99;
    c.passenger_fraction = 0.75;
    c.handover_hysteresis_db = 1.5;
    CHECK(config_from_json(to_json(c)) == c);
  }

  TEST_CASE("scenario counts per kind") {
    ScenarioConfig c;
    c.scenario_kind = ScenarioKind::MIab;
    const Scenario s = build_scenario(c);
    CHECK(count_kind(s, NodeKind::IabDonor) == 3);
    CHECK(count_kind(s, NodeKind::MIabDu) == 6);
    CHECK(count_kind(s, NodeKind::MIabMt) == 6);
    CHECK(count_kind(s, NodeKind::Passenger) == 36);
    CHECK(count_kind(s, NodeKind::Pedestrian) == 36);
    CHECK(count_kind(s, NodeKind::PicoGnb) == 0);

    c.scenario_kind = ScenarioKind::MacrosPicos;
    const Scenario p = build_scenario(c);
    CHECK(count_kind(p, NodeKind::IabDonor) + count_kind(p, NodeKind::PicoGnb) == 9);
    CHECK(count_kind(p, NodeKind::MIabDu) == 0);

    c.scenario_kind = ScenarioKind::OnlyMacros;
    const Scenario o = build_scenario(c);
    CHECK(count_kind(o, NodeKind::IabDonor) == 3);
    CHECK(count_kind(o, NodeKind::PicoGnb) == 0);
    CHECK(count_kind(o, NodeKind::Passenger) + count_kind(o, NodeKind::Pedestrian) == 72);
  }

  TEST_CASE("entity parameters match the published table") {
    struct Row {
      NodeKind kind;
      double h, p, tilt;
      ArrayType array;
      ElementPattern pattern;
      double gain, speed;
    };
    const Row rows[] = {
        {NodeKind::IabDonor, 25.0, 35.0, 12.0, ArrayType::Ura8x8, ElementPattern::ThreeGpp3d, 8.0, 0.0},
        {NodeKind::MIabDu, 2.5, 24.0, 4.0, ArrayType::Ura8x8, ElementPattern::ThreeGpp3d, 8.0, 40.0},
        {NodeKind::MIabMt, 3.5, 24.0, 0.0, ArrayType::Ula64, ElementPattern::Omni, 0.0, 40.0},
        {NodeKind::Pedestrian, 1.5, 24.0, 0.0, ArrayType::SingleAntenna, ElementPattern::Omni, 0.0, 3.0},
        {NodeKind::Passenger, 1.8, 24.0, 0.0, ArrayType::SingleAntenna, ElementPattern::Omni, 0.0, 40.0},
    };
    ScenarioConfig c;
    const Scenario s = build_scenario(c);
    for (const Row& r : rows) {
      CAPTURE(to_string(r.kind));
      int seen = 0;
      for (const auto& d : s.nodes) {
        if (d.kind != r.kind) continue;
        ++seen;
        CHECK(d.height_m == r.h);
        CHECK(d.tx_power_dbm == r.p);
        CHECK(d.tilt_deg == r.tilt);
        CHECK(d.array == r.array);
        CHECK(d.element_pattern == r.pattern);
        CHECK(d.max_element_gain_dbi == r.gain);
        CHECK(d.speed_kmh == r.speed);
      }
      CHECK(seen > 0);
    }
  }

  TEST_CASE("bus-mounted nodes share the bus id; seats are distinct") {
    ScenarioConfig c;
    c.passenger_fraction = 0.75;
    const Scenario s = build_scenario(c);
    REQUIRE(s.bus_nodes.size() == 6);
    for (std::size_t b = 0; b < s.bus_nodes.size(); ++b) {
      const BusNodes& bn = s.bus_nodes[b];
      CHECK(s.node(bn.du).bus_id->value == b);
      CHECK(s.node(bn.mt).bus_id->value == b);
      CHECK(bn.passengers.size() == 9);
      std::set<std::pair<double, double>> seats;
      for (NodeId p : bn.passengers) {
        CHECK(s.node(p).bus_id->value == b);
        seats.insert({s.mount_offset[p.value].x, s.mount_offset[p.value].y});
      }
      CHECK(seats.size() == bn.passengers.size());
    }
  }

  TEST_CASE("same seed gives identical scenarios, different seed differs") {
    ScenarioConfig c;
    c.seed = 17;
    const std::string a = serialize(build_scenario(c));
    const std::string b = serialize(build_scenario(c));
    CHECK(a == b);
    c.seed = 18;
    CHECK(serialize(build_scenario(c)) != a);
  }

  TEST_CASE("picos on a hexagon around the grid center") {
    ScenarioConfig c;
    c.scenario_kind = ScenarioKind::MacrosPicos;
    const Scenario s = build_scenario(c);
    REQUIRE(s.picos.size() == 6);
    for (NodeId p : s.picos) {
      const Vec3& v = s.initial_position[p.value];
      CHECK(std::hypot(v.x, v.y) == doctest::Approx(c.pico_ring_radius_m));
    }
  }
}

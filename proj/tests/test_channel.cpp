#include <doctest.h>

#include <cmath>
#include <vector>

#include "miab/channel.hpp"
#include "miab/errors.hpp"
#include "miab/rng.hpp"
#include "miab/scenario.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace miab;

namespace {

BusBody bus_at(double x, double y, double heading = 0.0) {
  BusBody b;
  b.center = {x, y, 0};
  b.heading_rad = heading;
  return b;
}

}  // namespace

TEST_SUITE("channel") {
  TEST_CASE("channel type mapping") {
    using K = NodeKind;
    CHECK(classify_link(K::IabDonor, K::MIabMt) == ChannelType::UMa);
    CHECK(classify_link(K::MIabMt, K::IabDonor) == ChannelType::UMa);
    CHECK(classify_link(K::IabDonor, K::Pedestrian) == ChannelType::UMa);
    CHECK(classify_link(K::IabDonor, K::Passenger) == ChannelType::UMa);
    CHECK(classify_link(K::MIabDu, K::Passenger) == ChannelType::IndoorHotspot);
    CHECK(classify_link(K::Pedestrian, K::Passenger) == ChannelType::UMi);
    CHECK(classify_link(K::MIabDu, K::Pedestrian) == ChannelType::UMi);
    CHECK(classify_link(K::MIabMt, K::Pedestrian) == ChannelType::UMi);
    CHECK(classify_link(K::MIabMt, K::Passenger) == ChannelType::UMi);
    CHECK_THROWS_AS(classify_link(K::MIabMt, K::MIabMt), UnsupportedPair);
    CHECK_THROWS_AS(classify_link(K::MIabDu, K::MIabDu), UnsupportedPair);
  }

  TEST_CASE("body crossings") {
    const std::vector<BusBody> buses{bus_at(0, 0), bus_at(40, 0)};
    const Vec3 du_x{-5.5, 0, 2.5}, pax_x{2.0, 0.6, 1.8}, pax_y{41.0, -0.6, 1.8}, donor{60, 60, 25};
    CHECK(penetration_crossings(du_x, pax_x, buses) == 0);
    CHECK(penetration_crossings(donor, pax_x, buses) == 1);
    CHECK(penetration_crossings(du_x, pax_y, buses) == 2);
    CHECK(penetration_crossings(pax_x, du_x, buses) == 0);
    // Straight through a body without an endpoint inside.
    CHECK(penetration_crossings({-20, 0, 1.5}, {20, 0, 1.5}, buses) == 1);
    CHECK(penetration_crossings({-20, 0, 1.5}, {60, 0, 1.5}, buses) == 2);
    CHECK(penetration_crossings({-20, 10, 1.5}, {20, 10, 1.5}, buses) == 0);
    CHECK(penetration_crossings({-20, 0, 5.0}, {20, 0, 5.0}, buses) == 0);
    // Roof antenna of bus 0: its own body counts only toward nodes inside it.
    const Vec3 mt{-5.5, 0, 3.5};
    const Vec3 ped_ahead{30, 0, 1.5};
    CHECK(penetration_crossings(mt, ped_ahead, std::span<const BusBody>(buses.data(), 1)) == 1);
    CHECK(penetration_crossings(mt, ped_ahead, std::span<const BusBody>(buses.data(), 1), 0) == 0);
    CHECK(penetration_crossings(ped_ahead, mt, std::span<const BusBody>(buses.data(), 1), std::nullopt, 0) == 0);
    CHECK(penetration_crossings(mt, pax_x, buses, 0) == 1);
    CHECK(penetration_crossings(mt, pax_y, buses, 0) == 1);
    CHECK(penetration_db(0) == 0.0);
    CHECK(penetration_db(1) == doctest::Approx(40.1));
    CHECK(penetration_db(2) == doctest::Approx(80.2));
    CHECK(penetration_db(3) == doctest::Approx(80.2));
  }

  TEST_CASE("pathloss matches the independent formula oracle") {
    const double worst = oracle::pathloss_worst_error(10000, 2024);
    CHECK(worst <= 1e-9);
  }

  TEST_CASE("pathloss monotone in distance; NLOS never below LOS") {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
      const double d = 40.0 + rng.uniform() * 400.0;
      for (auto t : {ChannelType::UMa, ChannelType::UMi, ChannelType::IndoorHotspot})
        for (auto s : {LosState::Los, LosState::Nlos})
          CHECK(pathloss_db(t, s, 2 * d, 28e9, 25.0, 1.5) > pathloss_db(t, s, d, 28e9, 25.0, 1.5));
      CHECK(pathloss_db(ChannelType::UMi, LosState::Nlos, d, 28e9, 3.5, 1.5) >=
            pathloss_db(ChannelType::UMi, LosState::Los, d, 28e9, 3.5, 1.5));
    }
  }

  TEST_CASE("example geometry: UMa LOS 100 m from a 25 m mast") {
    const double v = pathloss_db(ChannelType::UMa, LosState::Los, 100.0, 28e9, 25.0, 1.5);
    CHECK(v == doctest::Approx(oracle::pathloss(ChannelType::UMa, LosState::Los, 100.0, 28e9, 25.0, 1.5)).epsilon(1e-12));
    CHECK(v == doctest::Approx(28.0 + 22.0 * 2.0 + 20.0 * std::log10(28.0)));
  }

  TEST_CASE("validity range") {
    CHECK_THROWS_AS(pathloss_db(ChannelType::UMi, LosState::Los, 5.0, 28e9, 3.5, 1.5), RangeError);
    CHECK_THROWS_AS(pathloss_db(ChannelType::IndoorHotspot, LosState::Los, 0.5, 28e9, 2.5, 1.8), RangeError);
    const auto c = pathloss_db_clamped(ChannelType::IndoorHotspot, LosState::Los, 0.5, 28e9, 2.5, 1.8);
    CHECK(c.clamped);
    CHECK(c.value_db == doctest::Approx(pathloss_db(ChannelType::IndoorHotspot, LosState::Los, 1.0, 28e9, 2.5, 1.8)));
    const auto u = pathloss_db_clamped(ChannelType::UMi, LosState::Los, 20.0, 28e9, 3.5, 1.5);
    CHECK_FALSE(u.clamped);
  }

  TEST_CASE("LOS probability limits") {
    for (auto t : {ChannelType::UMa, ChannelType::UMi, ChannelType::IndoorHotspot}) {
      CHECK(los_probability(t, 0.0) == 1.0);
      CHECK(los_probability(t, 1.0) == 1.0);
      CHECK(los_probability(t, 300.0) < los_probability(t, 30.0));
    }
    CHECK(los_probability(ChannelType::UMi, 100.0) ==
          doctest::Approx(18.0 / 100.0 + std::exp(-100.0 / 36.0) * (1 - 18.0 / 100.0)));
  }

  TEST_CASE("per-RE power and RSRP budget") {
    CHECK(per_re_power_dbm(35.0, 66) == doctest::Approx(6.01).epsilon(1e-3));
    NodeDescriptor tx = entity_defaults(NodeKind::IabDonor);
    LinkBudget b;
    CHECK(rsrp_dbm(tx, b, 66) == doctest::Approx(per_re_power_dbm(35.0, 66)));
    const double base = rsrp_dbm(tx, b, 66);
    b.penetration_db = penetration_db(1);
    CHECK(base - rsrp_dbm(tx, b, 66) == doctest::Approx(40.1));
    b.penetration_db = penetration_db(2);
    CHECK(base - rsrp_dbm(tx, b, 66) == doctest::Approx(80.2));
  }

  TEST_CASE("shadowing autocorrelation follows exp(-dd / d_corr)") {
    const double dcorr = 10.0;
    const int chains = 20000;
    Rng rng(99);
    for (double dd : {dcorr / 2, dcorr}) {
      double sxy = 0, sxx = 0, syy = 0;
      for (int i = 0; i < chains; ++i) {
        CorrelatedGaussian g(dcorr);
        const double x = g.update({0, 0, 0}, rng.normal());
        const double y = g.update({dd, 0, 0}, rng.normal());
        sxy += x * y, sxx += x * x, syy += y * y;
      }
      CHECK(sxy / std::sqrt(sxx * syy) == doctest::Approx(std::exp(-dd / dcorr)).epsilon(0.05));
    }
  }

  TEST_CASE("model state: reciprocity, forced NLOS across bodies, determinism") {
    ScenarioConfig cfg;
    cfg.seed = 3;
    const Scenario s = build_scenario(cfg);
    const WorldState w = test::static_world(s);
    ChannelModel a(s, 42), b(s, 42);
    a.begin_slot(0, w);
    b.begin_slot(0, w);
    int crossed = 0;
    for (std::uint32_t i = 0; i < s.size(); ++i)
      for (std::uint32_t j = i + 1; j < s.size(); ++j) {
        const NodeKind ki = s.nodes[i].kind, kj = s.nodes[j].kind;
        if ((ki == NodeKind::MIabMt && kj == NodeKind::MIabMt) || (ki == NodeKind::MIabDu && kj == NodeKind::MIabDu))
          continue;
        const LinkBudget& x = a.large_scale(NodeId{i}, NodeId{j});
        const LinkBudget& y = a.large_scale(NodeId{j}, NodeId{i});
        REQUIRE(x.pathloss_db == y.pathloss_db);
        REQUIRE(x.shadowing_db == y.shadowing_db);
        REQUIRE(x.penetration_db == y.penetration_db);
        REQUIRE(x.los == y.los);
        REQUIRE(b.large_scale(NodeId{i}, NodeId{j}).loss_db() == x.loss_db());
        REQUIRE(x.crossings >= 0);
        REQUIRE(x.crossings <= 2);
        if (x.crossings > 0) {
          ++crossed;
          REQUIRE(x.los == LosState::Nlos);
        }
      }
    CHECK(crossed > 0);
  }

  TEST_CASE("co-sited DU and MT share large-scale draws toward a third node") {
    ScenarioConfig cfg;
    cfg.seed = 5;
    const Scenario s = build_scenario(cfg);
    ChannelModel m(s, 7);
    m.begin_slot(0, test::static_world(s));
    const BusNodes& bus = s.bus_nodes[0];
    int compared = 0;
    for (NodeId ped : s.ues) {
      if (s.node(ped).kind != NodeKind::Pedestrian) continue;
      const LinkBudget& du = m.large_scale(bus.du, ped);
      const LinkBudget& mt = m.large_scale(bus.mt, ped);
      if (du.los != mt.los) continue;
      const double sigma_du = shadowing_params(du.channel_type, du.los).sigma_db;
      const double sigma_mt = shadowing_params(mt.channel_type, mt.los).sigma_db;
      CHECK(du.shadowing_db / sigma_du == doctest::Approx(mt.shadowing_db / sigma_mt));
      ++compared;
    }
    CHECK(compared > 0);
  }

  TEST_CASE("fading has unit mean power") {
    ScenarioConfig cfg;
    const Scenario s = build_scenario(cfg);
    ChannelModel m(s, 1);
    const WorldState w = test::static_world(s);
    double sum = 0;
    int n = 0;
    for (std::int64_t slot = 0; slot < 20000; ++slot) {
      m.begin_slot(slot, w);
      for (std::uint32_t j = 20; j < 26; ++j) {
        sum += m.fading_gain(s.donors[0], NodeId{j}, slot);
        ++n;
      }
    }
    CHECK(sum / n == doctest::Approx(1.0).epsilon(0.1));
    ChannelOptions off;
    off.fast_fading = false;
    ChannelModel flat(s, 1, off);
    flat.begin_slot(0, w);
    CHECK(flat.fading_gain(s.donors[0], NodeId{30}, 0) == 1.0);
  }
}

#include "miab/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "miab/errors.hpp"

namespace miab {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
// The pathloss tables define the breakpoint distance with c rounded to 3e8.
constexpr double kBreakpointC = 3.0e8;

bool is_donor(NodeKind k) { return k == NodeKind::IabDonor; }

}  // namespace

std::string_view to_string(ChannelType t) {
  switch (t) {
    case ChannelType::UMa: return "UMa";
    case ChannelType::UMi: return "UMi";
    case ChannelType::IndoorHotspot: return "InH";
  }
  return "?";
}

std::string_view to_string(LosState s) { return s == LosState::Los ? "LOS" : "NLOS"; }

ChannelType classify_link(NodeKind a, NodeKind b) {
  if (is_donor(a) || is_donor(b)) return ChannelType::UMa;
  if (a == NodeKind::MIabDu && b == NodeKind::MIabDu) throw UnsupportedPair("DU-DU link is never scheduled");
  if (a == NodeKind::MIabMt && b == NodeKind::MIabMt) throw UnsupportedPair("MT-MT link is never scheduled");
  const bool du_passenger = (a == NodeKind::MIabDu && b == NodeKind::Passenger) ||
                            (b == NodeKind::MIabDu && a == NodeKind::Passenger);
  if (du_passenger) return ChannelType::IndoorHotspot;
  return ChannelType::UMi;
}

ChannelType classify_link(const NodeDescriptor& a, const NodeDescriptor& b) { return classify_link(a.kind, b.kind); }

bool BusBody::contains(const Vec3& p) const {
  const Vec3 l = rotate_z(p - center, -heading_rad);
  constexpr double eps = 1e-9;
  return std::abs(l.x) <= length_m / 2 + eps && std::abs(l.y) <= width_m / 2 + eps && l.z >= -eps &&
         l.z <= height_m + eps;
}

namespace {

// Slab test of the segment against the body box, in the body frame.
bool segment_hits_box(const BusBody& body, const Vec3& a, const Vec3& b) {
  const Vec3 la = rotate_z(a - body.center, -body.heading_rad);
  const Vec3 lb = rotate_z(b - body.center, -body.heading_rad);
  const double lo[3] = {-body.length_m / 2, -body.width_m / 2, 0.0};
  const double hi[3] = {body.length_m / 2, body.width_m / 2, body.height_m};
  const double p0[3] = {la.x, la.y, la.z};
  const double d[3] = {lb.x - la.x, lb.y - la.y, lb.z - la.z};
  double t0 = 0.0, t1 = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (p0[k] < lo[k] || p0[k] > hi[k]) return false;
      continue;
    }
    double ta = (lo[k] - p0[k]) / d[k], tb = (hi[k] - p0[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

int penetration_crossings(const Vec3& a, const Vec3& b, std::span<const BusBody> buses,
                          std::optional<std::size_t> roof_a, std::optional<std::size_t> roof_b) {
  int count = 0;
  for (std::size_t k = 0; k < buses.size(); ++k) {
    const BusBody& body = buses[k];
    const bool ia = body.contains(a), ib = body.contains(b);
    if (roof_a == k) {
      count += ib ? 1 : 0;
      continue;
    }
    if (roof_b == k) {
      count += ia ? 1 : 0;
      continue;
    }
    if (ia && ib) continue;
    if (ia != ib || segment_hits_box(body, a, b)) ++count;
  }
  return count;
}

double penetration_db(int crossings) { return kBusPenetrationDb * std::clamp(crossings, 0, kMaxPenetrations); }

double min_valid_distance_m(ChannelType t) { return t == ChannelType::IndoorHotspot ? 1.0 : 10.0; }

namespace {

double pathloss_unchecked(ChannelType t, LosState los, double d3d, double fc_hz, double h_tx, double h_rx) {
  const double fc = fc_hz / 1e9;
  const double h_bs = std::max(h_tx, h_rx), h_ut = std::min(h_tx, h_rx);
  const double dh = h_bs - h_ut;
  const double d2d = std::sqrt(std::max(d3d * d3d - dh * dh, 0.0));
  switch (t) {
    case ChannelType::UMa: {
      const double dbp = 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * fc_hz / kBreakpointC;
      const double los_pl = d2d <= dbp ? 28.0 + 22.0 * std::log10(d3d) + 20.0 * std::log10(fc)
                                       : 28.0 + 40.0 * std::log10(d3d) + 20.0 * std::log10(fc) -
                                             9.0 * std::log10(dbp * dbp + dh * dh);
      if (los == LosState::Los) return los_pl;
      const double nlos = 13.54 + 39.08 * std::log10(d3d) + 20.0 * std::log10(fc) - 0.6 * (h_ut - 1.5);
      return std::max(los_pl, nlos);
    }
    case ChannelType::UMi: {
      const double dbp = 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * fc_hz / kBreakpointC;
      const double los_pl = d2d <= dbp ? 32.4 + 21.0 * std::log10(d3d) + 20.0 * std::log10(fc)
                                       : 32.4 + 40.0 * std::log10(d3d) + 20.0 * std::log10(fc) -
                                             9.5 * std::log10(dbp * dbp + dh * dh);
      if (los == LosState::Los) return los_pl;
      const double nlos = 35.3 * std::log10(d3d) + 22.4 + 21.3 * std::log10(fc) - 0.3 * (h_ut - 1.5);
      return std::max(los_pl, nlos);
    }
    case ChannelType::IndoorHotspot: {
      const double los_pl = 32.4 + 17.3 * std::log10(d3d) + 20.0 * std::log10(fc);
      if (los == LosState::Los) return los_pl;
      return std::max(los_pl, 38.3 * std::log10(d3d) + 17.30 + 24.9 * std::log10(fc));
    }
  }
  return 0.0;
}

}  // namespace

double pathloss_db(ChannelType t, LosState los, double d3d, double fc_hz, double h_tx, double h_rx) {
  const double dh = std::abs(h_tx - h_rx);
  const double d = t == ChannelType::IndoorHotspot ? d3d : std::sqrt(std::max(d3d * d3d - dh * dh, 0.0));
  if (!(d >= min_valid_distance_m(t) - 1e-12))
    throw RangeError("distance " + std::to_string(d) + " m below the validity range of " +
                     std::string(to_string(t)));
  return pathloss_unchecked(t, los, d3d, fc_hz, h_tx, h_rx);
}

ClampedPathloss pathloss_db_clamped(ChannelType t, LosState los, double d3d, double fc_hz, double h_tx, double h_rx) {
  const double dh = std::abs(h_tx - h_rx);
  const double dmin = min_valid_distance_m(t);
  if (t == ChannelType::IndoorHotspot) {
    if (d3d >= dmin) return {pathloss_unchecked(t, los, d3d, fc_hz, h_tx, h_rx), false};
    return {pathloss_unchecked(t, los, dmin, fc_hz, h_tx, h_rx), true};
  }
  const double d2d = std::sqrt(std::max(d3d * d3d - dh * dh, 0.0));
  if (d2d >= dmin) return {pathloss_unchecked(t, los, d3d, fc_hz, h_tx, h_rx), false};
  return {pathloss_unchecked(t, los, std::sqrt(dmin * dmin + dh * dh), fc_hz, h_tx, h_rx), true};
}

double los_probability(ChannelType t, double d2d) {
  switch (t) {
    case ChannelType::UMa:
      if (d2d <= 18.0) return 1.0;
      return 18.0 / d2d + std::exp(-d2d / 63.0) * (1.0 - 18.0 / d2d);
    case ChannelType::UMi:
      if (d2d <= 18.0) return 1.0;
      return 18.0 / d2d + std::exp(-d2d / 36.0) * (1.0 - 18.0 / d2d);
    case ChannelType::IndoorHotspot:
      // Open office.
      if (d2d <= 5.0) return 1.0;
      if (d2d <= 49.0) return std::exp(-(d2d - 5.0) / 70.8);
      return std::exp(-(d2d - 49.0) / 211.7) * 0.54;
  }
  return 0.0;
}

ShadowingParams shadowing_params(ChannelType t, LosState los) {
  const bool l = los == LosState::Los;
  switch (t) {
    case ChannelType::UMa: return l ? ShadowingParams{4.0, 37.0} : ShadowingParams{6.0, 50.0};
    case ChannelType::UMi: return l ? ShadowingParams{4.0, 10.0} : ShadowingParams{7.82, 13.0};
    case ChannelType::IndoorHotspot: return l ? ShadowingParams{3.0, 10.0} : ShadowingParams{8.03, 6.0};
  }
  return {0, 1};
}

double los_correlation_m(ChannelType t) { return t == ChannelType::IndoorHotspot ? 10.0 : 50.0; }

double CorrelatedGaussian::update(const Vec3& at, double fresh) {
  if (!init_) {
    value_ = fresh;
    init_ = true;
  } else {
    const double rho = std::exp(-(at - last_).norm() / corr_m_);
    value_ = rho * value_ + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * fresh;
  }
  last_ = at;
  return value_;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double per_re_power_dbm(double tx_power_dbm, int num_rbs) { return tx_power_dbm - 10.0 * std::log10(12.0 * num_rbs); }

double rsrp_dbm(const NodeDescriptor& tx, const LinkBudget& b, int num_rbs) {
  return per_re_power_dbm(tx.tx_power_dbm, num_rbs) + b.tx_array_gain_db + b.rx_array_gain_db - b.pathloss_db -
         b.shadowing_db - b.penetration_db;
}

ChannelModel::ChannelModel(const Scenario& scenario, std::uint64_t seed, ChannelOptions opts)
    : scenario_(scenario), seed_(seed), opts_(opts), wavelength_(kSpeedOfLight / scenario.config.carrier_hz) {
  const std::size_t n = scenario.size();
  pairs_.resize(n * (n - 1) / 2 + 1);
  gain_row_epoch_.assign(n * n, -1);
  gain_rows_.assign(n * n * n, 0.0);
}

std::size_t ChannelModel::pair_index(NodeId a, NodeId b) const {
  const std::size_t i = std::min(a.value, b.value), j = std::max(a.value, b.value);
  return j * (j - 1) / 2 + i;
}

void ChannelModel::begin_slot(std::int64_t slot, const WorldState& world) {
  slot_ = slot;
  const std::int64_t e = slot / opts_.epoch_slots;
  if (e != epoch_ || world_.position.empty()) {
    epoch_ = e;
    world_ = world;
  }
}

void ChannelModel::refresh(PairState& p, NodeId a, NodeId b, std::size_t index) {
  const NodeId i = std::min(a, b), j = std::max(a, b);
  const Vec3& pi = world_.position[i.value];
  const Vec3& pj = world_.position[j.value];
  const Vec3 rel = pj - pi;
  LinkBudget& lb = p.budget;
  if (p.epoch < 0) {
    lb.channel_type = classify_link(scenario_.node(i), scenario_.node(j));
    p.los_field = CorrelatedGaussian(los_correlation_m(lb.channel_type));
    p.shadow_los = CorrelatedGaussian(shadowing_params(lb.channel_type, LosState::Los).correlation_m);
    p.shadow_nlos = CorrelatedGaussian(shadowing_params(lb.channel_type, LosState::Nlos).correlation_m);
  }
  // The MT shares its bus's site with the DU, so both draw the same large-scale
  // realizations toward any third node.
  auto site = [&](NodeId n) {
    const NodeDescriptor& d = scenario_.node(n);
    return d.kind == NodeKind::MIabMt && d.bus_id ? scenario_.bus_nodes[d.bus_id->value].du : n;
  };
  const NodeId si = site(i), sj = site(j);
  const std::size_t key = si == sj ? index : pair_index(si, sj);
  Rng r(hash_combine(hash_combine(seed_, stream::kLargeScale), key), static_cast<std::uint64_t>(epoch_));
  const double g_los = p.los_field.update(rel, r.normal());
  const double g_sl = p.shadow_los.update(rel, r.normal());
  const double g_sn = p.shadow_nlos.update(rel, r.normal());

  lb.distance_3d_m = rel.norm();
  const double d2d = std::hypot(rel.x, rel.y);
  auto roof = [&](NodeId n) -> std::optional<std::size_t> {
    const NodeDescriptor& d = scenario_.node(n);
    if (d.kind == NodeKind::MIabMt && d.bus_id) return d.bus_id->value;
    return std::nullopt;
  };
  lb.crossings = std::min(penetration_crossings(pi, pj, world_.bodies, roof(i), roof(j)), kMaxPenetrations);
  lb.penetration_db = penetration_db(lb.crossings);
  if (lb.crossings > 0)
    lb.los = LosState::Nlos;
  else
    lb.los = normal_cdf(g_los) < los_probability(lb.channel_type, d2d) ? LosState::Los : LosState::Nlos;
  const auto pl = pathloss_db_clamped(lb.channel_type, lb.los, lb.distance_3d_m, scenario_.config.carrier_hz, pi.z,
                                      pj.z);
  lb.pathloss_db = pl.value_db;
  lb.clamped = pl.clamped;
  if (pl.clamped) ++clamp_count_;
  lb.shadowing_db = shadowing_params(lb.channel_type, lb.los).sigma_db * (lb.los == LosState::Los ? g_sl : g_sn);
  p.gain_lin = std::pow(10.0, -lb.loss_db() / 10.0);
  p.epoch = epoch_;
}

const LinkBudget& ChannelModel::large_scale(NodeId a, NodeId b) {
  if (a == b) throw UnsupportedPair("link to self");
  const std::size_t idx = pair_index(a, b);
  PairState& p = pairs_[idx];
  if (p.epoch != epoch_) refresh(p, a, b, idx);
  return p.budget;
}

double ChannelModel::path_gain_lin(NodeId a, NodeId b) {
  if (a == b) throw UnsupportedPair("link to self");
  const std::size_t idx = pair_index(a, b);
  PairState& p = pairs_[idx];
  if (p.epoch != epoch_) refresh(p, a, b, idx);
  return p.gain_lin;
}

double ChannelModel::beam_gain_db(NodeId node, NodeId steer_to, NodeId toward) {
  return 10.0 * std::log10(beam_gain_lin(node, steer_to, toward));
}

double ChannelModel::beam_gain_lin(NodeId node, NodeId steer_to, NodeId toward) {
  const NodeDescriptor& d = scenario_.node(node);
  if (d.array == ArrayType::SingleAntenna && d.element_pattern == ElementPattern::Omni)
    return std::pow(10.0, d.max_element_gain_dbi / 10.0);
  const std::size_t n = scenario_.size();
  const std::size_t row = node.value * n + steer_to.value;
  double* gains = &gain_rows_[row * n];
  if (gain_row_epoch_[row] != epoch_) {
    std::fill(gains, gains + n, std::numeric_limits<double>::quiet_NaN());
    gain_row_epoch_[row] = epoch_;
  }
  double& g = gains[toward.value];
  if (std::isnan(g)) {
    const Vec3& at = world_.position[node.value];
    const double db = miab::beam_gain_db(d.array, d.element_pattern, d.max_element_gain_dbi,
                                         world_.orientation[node.value], world_.position[steer_to.value] - at,
                                         world_.position[toward.value] - at);
    g = std::pow(10.0, db / 10.0);
  }
  return g;
}

LinkBudget ChannelModel::link_budget(NodeId tx, NodeId rx) {
  LinkBudget b = large_scale(tx, rx);
  b.tx_array_gain_db = beam_gain_db(tx, rx, rx);
  b.rx_array_gain_db = beam_gain_db(rx, tx, tx);
  return b;
}

double ChannelModel::rsrp_dbm(NodeId cell, NodeId node) {
  return miab::rsrp_dbm(scenario_.node(cell), link_budget(cell, node), scenario_.config.num_rbs);
}

double ChannelModel::fading_gain(NodeId a, NodeId b, std::int64_t slot) {
  if (!opts_.fast_fading) return 1.0;
  const std::size_t idx = pair_index(a, b);
  PairState& p = pairs_[idx];
  if (p.epoch != epoch_) refresh(p, a, b, idx);
  if (p.fading_slot == slot) return p.fading_cache;
  Rng r(hash_combine(hash_combine(seed_, stream::kFading), idx), static_cast<std::uint64_t>(slot));
  const std::complex<double> fresh = r.complex_normal();
  if (p.fading_slot < 0) {
    p.diffuse = fresh;
    p.los_phase = 2.0 * M_PI * r.uniform();
  } else {
    if (p.rho_epoch != epoch_) {
      const Vec3 dv = world_.velocity[a.value] - world_.velocity[b.value];
      const double v = std::max(dv.norm(), opts_.min_doppler_speed_mps);
      const double fd = v / wavelength_;
      p.rho_step = std::clamp(std::cyl_bessel_j(0.0, 2.0 * M_PI * fd * scenario_.config.slot_s), 0.0, 0.999999);
      p.rho_epoch = epoch_;
    }
    const std::int64_t gap = slot - p.fading_slot;
    const double rho = gap == 1 ? p.rho_step : std::pow(p.rho_step, static_cast<double>(gap));
    p.diffuse = rho * p.diffuse + std::sqrt(1.0 - rho * rho) * fresh;
  }
  p.fading_slot = slot;
  double k = 0.0;
  if (p.budget.los == LosState::Los) k = std::pow(10.0, opts_.rician_k_db / 10.0);
  const std::complex<double> h =
      std::sqrt(k / (k + 1.0)) * std::polar(1.0, p.los_phase) + std::sqrt(1.0 / (k + 1.0)) * p.diffuse;
  p.fading_cache = std::norm(h);
  p.budget.small_scale_db = 10.0 * std::log10(std::max(p.fading_cache, 1e-30));
  return p.fading_cache;
}

}  // namespace miab

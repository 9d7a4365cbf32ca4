#include "miab/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "miab/errors.hpp"

namespace miab {

namespace {

constexpr double kDeg = M_PI / 180.0;
constexpr const char* kBuildId = "miab-sim 1.0";

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
double lin_to_db(double x) { return 10.0 * std::log10(std::max(x, 1e-300)); }

CbrGenerator make_traffic(const Scenario& s) {
  Rng rng(s.config.seed, stream::kTraffic);
  return CbrGenerator(s.ues, s.config, rng);
}

ChannelOptions channel_options(const SimOptions& o) {
  ChannelOptions c;
  c.epoch_slots = o.epoch_slots;
  c.fast_fading = o.fast_fading;
  return c;
}

const std::string& dir_suffix(Direction d) {
  static const std::string dl = "_dl", ul = "_ul";
  return d == Direction::Dl ? dl : ul;
}

}  // namespace

nlohmann::json SimOptions::to_json() const {
  return {{"warmup_slots", warmup_slots},
          {"epoch_slots", epoch_slots},
          {"fast_fading", fast_fading},
          {"preemptive_bsr", preemptive_bsr},
          {"discard_inflight", discard_inflight},
          {"admission",
           {{"enabled", admission.enabled},
            {"min_rsrp_dbm", admission.min_rsrp_dbm},
            {"min_dwell_s", admission.min_dwell_s},
            {"dwell_radius_m", admission.dwell_radius_m}}},
          {"mcs_table", mcs_table.version()}};
}

struct Simulator::Transmission {
  NodeId cell, peer;  // scheduling cell and the node it serves
  NodeId tx, rx;
  Direction dir{Direction::Dl};
  bool backhaul{false};
  std::string cls;
  std::vector<int> rbs;
  double p_rb_mw{0};
  double gain_lin{1};  // access only: beams and large-scale gain
  int mcs{0};
  StreamSet streams;
  std::vector<double> stream_gain;  // backhaul: large-scale scaled squared singular values
  // Scheduled bearers: one for access; one per UE reached through the MT for backhaul.
  struct Bearer {
    std::uint32_t id{0};
    BearerQueue* queue{nullptr};
    std::int64_t eligible_bits{0};
    int rbs{0};
  };
  std::vector<Bearer> bearers;
};

Simulator::Simulator(const ScenarioConfig& cfg, SimOptions opts)
    : cfg_(cfg),
      opts_(std::move(opts)),
      scenario_(build_scenario(cfg)),
      channel_(scenario_, cfg.seed, channel_options(opts_)),
      metrics_(scenario_, opts_.warmup_slots, opts_.mcs_table.highest()),
      table_(scenario_),
      traffic_(make_traffic(scenario_)),
      mobility_rng_(cfg.seed, stream::kMobility),
      link_rng_(cfg.seed, stream::kLink) {
  if (opts_.epoch_slots < 1) throw ValidationError("epoch_slots", "must be at least 1");
  if (opts_.warmup_slots < 0 || opts_.warmup_slots >= cfg.duration_slots)
    throw ValidationError("warmup_slots", "must lie inside the run");
  const std::size_t n = scenario_.size();
  dl_queue_.resize(n);
  ul_queue_.resize(n);
  bh_dl_queue_.resize(n);
  bh_ul_queue_.resize(n);
  served_ues_.resize(n);
  served_mts_.resize(n);
  noise_rb_mw_ = db_to_lin(noise_per_rb_dbm(cfg.scs_hz));

  if (opts_.dump_dir && (opts_.dump_grants || opts_.dump_links)) {
    std::error_code ec;
    std::filesystem::create_directories(*opts_.dump_dir, ec);
    if (ec) throw IoError("cannot create " + opts_.dump_dir->string());
    auto open = [&](const char* name, const char* header) {
      auto f = std::make_unique<std::ofstream>(*opts_.dump_dir / name, std::ios::binary);
      if (!*f) throw IoError(std::string("cannot write ") + name);
      *f << header << '\n';
      return f;
    };
    if (opts_.dump_grants) grants_out_ = open("grants.csv", "slot,cell,bearer,direction,rbs,mcs,streams,outcome");
    if (opts_.dump_links)
      links_out_ = open("links.csv", "slot,tx,rx,type,los,pathloss_db,shadowing_db,penetration_db,rsrp_dbm");
  }
}

Simulator::~Simulator() = default;

void Simulator::move_nodes() {
  if (slot_ == 0) return;
  step_mobility(scenario_.layout, scenario_.buses, cfg_.slot_s, mobility_rng_);
  step_mobility(scenario_.layout, scenario_.pedestrian_tracks, cfg_.slot_s, mobility_rng_);
}

void Simulator::build_world() {
  const std::size_t n = scenario_.size();
  world_.position.assign(n, {});
  world_.velocity.assign(n, {});
  world_.orientation.assign(n, {});
  world_.bodies.clear();
  for (const auto& b : scenario_.buses) {
    BusBody body;
    body.center = {b.position.x, b.position.y, 0.0};
    body.heading_rad = b.heading.angle();
    body.length_m = scenario_.bus_geometry.length_m;
    body.width_m = scenario_.bus_geometry.width_m;
    body.height_m = scenario_.bus_geometry.height_m;
    world_.bodies.push_back(body);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const NodeDescriptor& d = scenario_.nodes[i];
    if (d.bus_id) {
      const MobileState& st = scenario_.buses[d.bus_id->value];
      const double ang = st.heading.angle();
      const Vec3& m = scenario_.mount_offset[i];
      Vec3 p = st.position + rotate_z({m.x, m.y, 0.0}, ang);
      p.z = m.z;
      world_.position[i] = p;
      world_.velocity[i] = {st.heading.dx * st.speed_mps, st.heading.dy * st.speed_mps, 0.0};
      if (d.kind == NodeKind::MIabMt) world_.orientation[i] = {ang, d.tilt_deg * kDeg};
      // The DU panel faces the curb side (traffic keeps right).
      if (d.kind == NodeKind::MIabDu) world_.orientation[i] = {ang - M_PI / 2, d.tilt_deg * kDeg};
    } else if (scenario_.pedestrian_index[i] >= 0) {
      const MobileState& st = scenario_.pedestrian_tracks[scenario_.pedestrian_index[i]];
      world_.position[i] = st.position;
      world_.velocity[i] = {st.heading.dx * st.speed_mps, st.heading.dy * st.speed_mps, 0.0};
    } else {
      world_.position[i] = scenario_.initial_position[i];
      world_.orientation[i] = scenario_.fixed_orientation[i];
    }
  }
}

void Simulator::update_topology() {
  const double hyst = cfg_.handover_hysteresis_db;
  auto audit = [&](NodeId node, const std::vector<Candidate>& cands) {
    const NodeId s = table_.serving(node);
    double best = -1e300, serving = -1e300;
    for (const auto& c : cands) {
      best = std::max(best, c.rsrp_dbm);
      if (c.cell == s) serving = c.rsrp_dbm;
    }
    if (serving < best - hyst - 1e-9) ++metrics_.audits.attachment_optimality;
  };
  auto rsrp_of = [](const std::vector<Candidate>& cands, NodeId cell) {
    for (const auto& c : cands)
      if (c.cell == cell) return c.rsrp_dbm;
    return -1e300;
  };

  for (const auto& bus : scenario_.bus_nodes) {
    if (bus.mt == kNoNode) continue;
    std::vector<Candidate> cands;
    for (NodeId donor : scenario_.donors)
      if (table_.iab_support(donor)) cands.push_back({donor, channel_.rsrp_dbm(donor, bus.mt)});
    const NodeId old = table_.serving(bus.mt);
    if (old == kNoNode) {
      integrate_miab_node(table_, scenario_, bus.mt, cands, slot_);
    } else {
      const NodeId chosen = evaluate_attachment(old, cands, hyst);
      if (chosen != old) {
        table_.attach(bus.mt, chosen, slot_);
        ++migrations_;
        events_.push_back({slot_, bus.mt, old, chosen, rsrp_of(cands, old), rsrp_of(cands, chosen)});
        if (opts_.discard_inflight)
          for (NodeId ue : served_ues_[bus.du.value])
            for (auto& q : bh_dl_queue_[ue.value].drain()) metrics_.on_dropped(q.packet);
      } else {
        table_.mark_evaluated(bus.mt, slot_);
      }
    }
    audit(bus.mt, cands);
    if (scenario_.node(table_.serving(bus.mt)).kind != NodeKind::IabDonor) ++metrics_.audits.mt_non_donor;
  }

  for (NodeId ue : scenario_.ues) {
    const NodeKind kind = scenario_.node(ue).kind;
    std::vector<Candidate> cands;
    for (NodeId c : scenario_.donors) cands.push_back({c, channel_.rsrp_dbm(c, ue)});
    for (NodeId c : scenario_.picos) cands.push_back({c, channel_.rsrp_dbm(c, ue)});
    for (const auto& bus : scenario_.bus_nodes) {
      if (bus.du == kNoNode || !table_.servable(bus.du)) continue;
      const double rsrp = channel_.rsrp_dbm(bus.du, ue);
      if (kind == NodeKind::Pedestrian && opts_.admission.enabled) {
        const double dwell = expected_dwell_s(world_.position[ue.value], world_.velocity[ue.value],
                                              world_.position[bus.du.value], world_.velocity[bus.du.value],
                                              opts_.admission.dwell_radius_m);
        if (!admit_to_mobile_cell(opts_.admission, rsrp, dwell)) continue;
      }
      cands.push_back({bus.du, rsrp});
    }
    const NodeId old = table_.serving(ue);
    const std::optional<NodeId> current = old == kNoNode ? std::nullopt : std::optional<NodeId>(old);
    const NodeId chosen = evaluate_attachment(current, cands, hyst);
    if (chosen != old)
      attach_ue(ue, chosen, rsrp_of(cands, old), rsrp_of(cands, chosen));
    else
      table_.mark_evaluated(ue, slot_);
    audit(ue, cands);
  }
  rebuild_served_lists();

  if (links_out_) {
    auto dump = [&](NodeId cell, NodeId node) {
      const LinkBudget b = channel_.link_budget(cell, node);
      *links_out_ << slot_ << ',' << cell.value << ',' << node.value << ',' << to_string(b.channel_type) << ','
                  << to_string(b.los) << ',' << format_double(b.pathloss_db, 3) << ','
                  << format_double(b.shadowing_db, 3) << ',' << format_double(b.penetration_db, 1) << ','
                  << format_double(channel_.rsrp_dbm(cell, node), 3) << '\n';
    };
    for (const auto& bus : scenario_.bus_nodes)
      if (bus.mt != kNoNode) dump(table_.serving(bus.mt), bus.mt);
    for (NodeId ue : scenario_.ues) dump(table_.serving(ue), ue);
  }
}

void Simulator::attach_ue(NodeId ue, NodeId cell, double old_rsrp, double new_rsrp) {
  const NodeId old = table_.serving(ue);
  table_.attach(ue, cell, slot_);
  if (old == kNoNode) return;
  ++handovers_;
  events_.push_back({slot_, ue, old, cell, old_rsrp, new_rsrp});
  // Packets held for the UE at its old cell follow the new route.
  if (opts_.discard_inflight) {
    for (auto& q : dl_queue_[ue.value].drain()) metrics_.on_dropped(q.packet);
    for (auto& q : bh_dl_queue_[ue.value].drain()) metrics_.on_dropped(q.packet);
  } else if (scenario_.node(cell).kind == NodeKind::MIabDu) {
    BearerQueue& to = bh_dl_queue_[ue.value];
    for (auto& q : dl_queue_[ue.value].drain()) to.insert_by_arrival(std::move(q));
  } else {
    BearerQueue& to = dl_queue_[ue.value];
    for (auto& q : bh_dl_queue_[ue.value].drain()) to.insert_by_arrival(std::move(q));
  }
  // UL packets still waiting at the old node's MT go back to the UE's own queue.
  if (scenario_.node(cell).kind != NodeKind::MIabDu)
    for (auto& q : bh_ul_queue_[ue.value].drain()) ul_queue_[ue.value].insert_by_arrival(std::move(q));
}

void Simulator::rebuild_served_lists() {
  for (auto& v : served_ues_) v.clear();
  for (auto& v : served_mts_) v.clear();
  for (NodeId ue : scenario_.ues) served_ues_[table_.serving(ue).value].push_back(ue);
  for (const auto& bus : scenario_.bus_nodes)
    if (bus.mt != kNoNode) served_mts_[table_.serving(bus.mt).value].push_back(bus.mt);
  donor_profiles_.clear();
  for (NodeId d : scenario_.donors) donor_profiles_.push_back(donor_link_profile(scenario_, table_, d));
}

std::string Simulator::access_class(NodeId cell, NodeId ue) const {
  std::string c;
  switch (scenario_.node(cell).kind) {
    case NodeKind::IabDonor: c = "macro"; break;
    case NodeKind::PicoGnb: c = "pico"; break;
    default: c = "miab"; break;
  }
  return c + (scenario_.node(ue).kind == NodeKind::Passenger ? "_passenger" : "_pedestrian");
}

double Simulator::la_estimate_db(const OuterLoopKey& key, NodeId tx, NodeId rx) {
  auto it = last_sinr_db_.find(key);
  if (it != last_sinr_db_.end()) return it->second;
  // No history yet: large-scale SNR with the power spread over the band.
  const double p_rb = db_to_lin(scenario_.node(tx).tx_power_dbm) / cfg_.num_rbs;
  const double g =
      channel_.beam_gain_lin(tx, rx, rx) * channel_.beam_gain_lin(rx, tx, tx) * channel_.path_gain_lin(tx, rx);
  return lin_to_db(p_rb * g / noise_rb_mw_);
}

std::vector<double> Simulator::backhaul_gains(NodeId donor, NodeId mt) {
  const LinkBudget& lb = channel_.large_scale(donor, mt);
  const auto& bank = backhaul_gain_bank(lb.los == LosState::Los);
  Rng r(hash_combine(cfg_.seed, stream::kBackhaul), hash_combine(mt.value, static_cast<std::uint64_t>(slot_)));
  const auto& sv2 = bank[r.below(bank.size())];
  const NodeDescriptor& d = scenario_.node(donor);
  const double element = element_gain_dbi(
      d.element_pattern, d.max_element_gain_dbi,
      to_local(world_.position[mt.value] - world_.position[donor.value], world_.orientation[donor.value]));
  const double scale = channel_.path_gain_lin(donor, mt) * db_to_lin(element);
  std::vector<double> g;
  g.reserve(sv2.size());
  for (double v : sv2) g.push_back(v * scale);
  return g;
}

void Simulator::schedule_cell(NodeId cell, SlotRole access, SlotRole backhaul, std::vector<Transmission>& out) {
  const McsTable& table = opts_.mcs_table;
  std::vector<BearerDemand> demands;
  std::vector<Transmission> pending;

  auto queue_for = [&](NodeId node, Direction d) -> BearerQueue& {
    return d == Direction::Dl ? dl_queue_[node.value] : ul_queue_[node.value];
  };
  auto base = [&](NodeId peer, Direction d, bool bh) {
    Transmission t;
    t.cell = cell;
    t.peer = peer;
    t.dir = d;
    t.backhaul = bh;
    t.tx = d == Direction::Dl ? cell : peer;
    t.rx = d == Direction::Dl ? peer : cell;
    return t;
  };
  auto add_bearer = [&](Transmission& t, NodeId id, BearerQueue& q) {
    const std::int64_t bits = q.eligible_bits(slot_);
    if (bits > 0) t.bearers.push_back({id.value, &q, bits, 0});
  };
  auto demand = [&](const Transmission& t, std::int64_t bpr) {
    for (const auto& b : t.bearers)
      demands.push_back({b.id, b.eligible_bits, bpr, *b.queue->head_arrival(), b.queue->last_served});
  };

  if (access != SlotRole::Silent) {
    const Direction d = access == SlotRole::Dl ? Direction::Dl : Direction::Ul;
    for (NodeId ue : served_ues_[cell.value]) {
      Transmission t = base(ue, d, false);
      add_bearer(t, ue, queue_for(ue, d));
      if (t.bearers.empty()) continue;
      const OuterLoopKey key{cell, ue, d};
      t.mcs = table.select(la_estimate_db(key, t.tx, t.rx), outer_loop_.offset(key));
      demand(t, bits_per_rb(table.efficiency(t.mcs)));
      pending.push_back(std::move(t));
    }
  }
  if (backhaul != SlotRole::Silent) {
    const Direction d = backhaul == SlotRole::Dl ? Direction::Dl : Direction::Ul;
    for (NodeId mt : served_mts_[cell.value]) {
      Transmission t = base(mt, d, true);
      // The donor schedules the UE bearers carried by the node, not the node as one bearer.
      for (NodeId ue : served_ues_[du_of_mt(scenario_, mt).value])
        add_bearer(t, ue, d == Direction::Dl ? bh_dl_queue_[ue.value] : bh_ul_queue_[ue.value]);
      if (t.bearers.empty()) continue;
      const OuterLoopKey key{cell, mt, d};
      const std::vector<double> gains = backhaul_gains(cell, mt);
      double p_rb = db_to_lin(scenario_.node(t.tx).tx_power_dbm) / cfg_.num_rbs;
      if (d == Direction::Ul)
        if (auto it = last_power_rb_mw_.find(key); it != last_power_rb_mw_.end()) p_rb = it->second;
      double interference = 0.0;
      if (auto it = last_interference_mw_.find(key); it != last_interference_mw_.end()) interference = it->second;
      t.streams = select_streams(gains, p_rb, noise_rb_mw_ + interference, table, outer_loop_.offset(key));
      t.stream_gain.assign(gains.begin(), gains.begin() + t.streams.streams());
      std::int64_t bpr = 0;
      for (int m : t.streams.mcs) bpr += bits_per_rb(table.efficiency(m));
      demand(t, bpr);
      pending.push_back(std::move(t));
    }
  }
  if (pending.empty()) return;

  const auto grants = schedule_rbs(slot_, demands, cfg_.num_rbs);
  metrics_.audits.scheduler_rule += count_schedule_violations(slot_, demands, grants, cfg_.num_rbs);
  std::map<std::uint32_t, std::pair<std::size_t, std::size_t>> owner;
  for (std::size_t i = 0; i < pending.size(); ++i)
    for (std::size_t j = 0; j < pending[i].bearers.size(); ++j) {
      owner[pending[i].bearers[j].id] = {i, j};
      demanded_.push_back(pending[i].bearers[j].queue);
    }
  for (const auto& g : grants) {
    const auto [i, j] = owner.at(g.bearer_id);
    Transmission& t = pending[i];
    t.rbs.push_back(g.rb);
    ++t.bearers[j].rbs;
    t.bearers[j].queue->last_served = SchedTime{slot_, g.rb};
  }
  for (auto& t : pending) {
    if (t.rbs.empty()) continue;
    std::sort(t.rbs.begin(), t.rbs.end());
    const double p = db_to_lin(scenario_.node(t.tx).tx_power_dbm);
    t.p_rb_mw = t.dir == Direction::Dl ? p / cfg_.num_rbs : p / static_cast<double>(t.rbs.size());
    if (t.backhaul) {
      t.cls = "backhaul";
    } else {
      t.cls = access_class(cell, t.peer);
      t.gain_lin = channel_.beam_gain_lin(t.tx, t.rx, t.rx) * channel_.beam_gain_lin(t.rx, t.tx, t.tx) *
                   channel_.path_gain_lin(t.tx, t.rx);
    }
    out.push_back(std::move(t));
  }
}

void Simulator::execute(std::vector<Transmission>& txs) {
  const int nrb = cfg_.num_rbs;
  const std::size_t n_tx = txs.size();
  const McsTable& table = opts_.mcs_table;
  std::vector<std::vector<int>> active(nrb);
  std::vector<std::uint8_t> transmitting(scenario_.size(), 0), receiving(scenario_.size(), 0);
  for (std::size_t i = 0; i < n_tx; ++i) {
    for (int rb : txs[i].rbs) active[rb].push_back(static_cast<int>(i));
    transmitting[txs[i].tx.value] = 1;
    receiving[txs[i].rx.value] = 1;
  }

  std::vector<double> coupling(n_tx * n_tx, -1.0);
  auto couple = [&](std::size_t h, std::size_t t) {
    double& c = coupling[h * n_tx + t];
    if (c < 0) {
      const Transmission& a = txs[h];
      const Transmission& b = txs[t];
      if (a.tx == b.tx || a.tx == b.rx)
        c = 0.0;
      else
        c = channel_.beam_gain_lin(a.tx, a.rx, b.rx) * channel_.beam_gain_lin(b.rx, b.tx, a.tx) *
            channel_.path_gain_lin(a.tx, b.rx) * channel_.fading_gain(a.tx, b.rx, slot_);
    }
    return c;
  };

  std::vector<double> sinr_rb;
  std::vector<int> ok_mcs;
  for (std::size_t i = 0; i < n_tx; ++i) {
    Transmission& t = txs[i];
    double i_avg = 0.0;
    for (std::size_t h = 0; h < n_tx; ++h)
      if (h != i) i_avg += couple(h, i) * txs[h].p_rb_mw * static_cast<double>(txs[h].rbs.size());
    i_avg /= nrb;
    std::vector<double> i_rb(t.rbs.size(), 0.0);
    for (std::size_t k = 0; k < t.rbs.size(); ++k)
      for (int h : active[t.rbs[k]])
        if (static_cast<std::size_t>(h) != i) i_rb[k] += couple(h, i) * txs[h].p_rb_mw;

    const OuterLoopKey key{t.cell, t.peer, t.dir};
    const int n = static_cast<int>(t.rbs.size());
    std::int64_t bits = 0;
    int ok_streams = 0;
    double wide_sinr = 0.0, snr = 0.0;
    int log_mcs = 0;
    if (!t.backhaul) {
      const double s = t.p_rb_mw * t.gain_lin * channel_.fading_gain(t.tx, t.rx, slot_);
      sinr_rb.resize(n);
      for (int k = 0; k < n; ++k) sinr_rb[k] = s / (noise_rb_mw_ + i_rb[k]);
      const TxOutcome outcome = realize_transmission(table, t.mcs, effective_sinr_db(sinr_rb), link_rng_);
      wide_sinr = s / (noise_rb_mw_ + i_avg);
      snr = s / noise_rb_mw_;
      metrics_.on_transmission(t.cls, t.dir, t.mcs, outcome, slot_);
      outer_loop_.update(key, outcome);
      last_sinr_db_[key] = lin_to_db(wide_sinr);
      if (outcome == TxOutcome::Success) {
        bits = tb_bits(table.efficiency(t.mcs), n, 1);
        ok_streams = 1;
      }
      log_mcs = t.mcs;
      if (t.dir == Direction::Dl && scenario_.node(t.cell).kind == NodeKind::MIabDu)
        metrics_.on_mt_effect(scenario_.node(t.peer).kind, transmitting[mt_of_du(scenario_, t.cell).value] != 0,
                              lin_to_db(wide_sinr), slot_);
    } else {
      const int k_streams = t.streams.streams();
      ok_mcs.clear();
      for (int st = 0; st < k_streams; ++st) {
        const double s = t.stream_gain[st] * t.p_rb_mw / k_streams;
        sinr_rb.resize(n);
        for (int k = 0; k < n; ++k) sinr_rb[k] = s / (noise_rb_mw_ + i_rb[k]);
        const int mcs = t.streams.mcs[st];
        const TxOutcome outcome = realize_transmission(table, mcs, effective_sinr_db(sinr_rb), link_rng_);
        metrics_.on_transmission(t.cls, t.dir, mcs, outcome, slot_);
        outer_loop_.update(key, outcome);
        if (outcome == TxOutcome::Success) {
          bits += tb_bits(table.efficiency(mcs), n, 1);
          ok_mcs.push_back(mcs);
          ++ok_streams;
        }
        if (st == 0) {
          wide_sinr = s / (noise_rb_mw_ + i_avg);
          snr = s / noise_rb_mw_;
        }
      }
      log_mcs = t.streams.mcs.front();
      last_interference_mw_[key] = i_avg;
      if (t.dir == Direction::Ul) last_power_rb_mw_[key] = t.p_rb_mw;
    }
    metrics_.on_sinr(t.cls + dir_suffix(t.dir), lin_to_db(wide_sinr), lin_to_db(snr), slot_);

    if (grants_out_) {
      const int total = t.backhaul ? t.streams.streams() : 1;
      *grants_out_ << slot_ << ',' << t.cell.value << ',' << t.peer.value << ',' << to_string(t.dir) << ',' << n
                   << ',' << log_mcs << ',' << total << ','
                   << (ok_streams == total ? "success" : ok_streams == 0 ? "error" : "partial") << '\n';
    }
    if (bits > 0) {
      // Each bearer carries its share of every decoded stream, over its own RBs.
      for (auto& b : t.bearers) {
        if (b.rbs == 0) continue;
        std::int64_t share = 0;
        if (t.backhaul)
          for (int m : ok_mcs) share += tb_bits(table.efficiency(m), b.rbs, 1);
        else
          share = bits;
        forward(t, b.queue->consume(std::min(share, b.eligible_bits)));
      }
    }
  }

  for (BearerQueue* q : demanded_)
    if (q->eligible_bits(slot_) > 0) q->mark_delayed(slot_);

  for (const auto& bus : scenario_.bus_nodes) {
    if (bus.du == kNoNode) continue;
    const bool mt_tx = transmitting[bus.mt.value], mt_rx = receiving[bus.mt.value];
    const bool du_tx = transmitting[bus.du.value], du_rx = receiving[bus.du.value];
    if ((mt_tx && du_rx) || (mt_rx && du_tx)) ++metrics_.audits.half_duplex;
  }
}

void Simulator::deliver(Packet& p, bool two_hop) {
  if (p.id >= delivered_.size()) delivered_.resize(std::max<std::size_t>(p.id + 1, delivered_.size() * 2), 0);
  if (delivered_[p.id]) {
    ++metrics_.audits.double_delivery;
    return;
  }
  delivered_[p.id] = 1;
  metrics_.on_delivered(p, slot_, two_hop);
}

void Simulator::forward(const Transmission& t, std::vector<Packet> done) {
  for (Packet& p : done) {
    if (!t.backhaul && t.dir == Direction::Dl) {
      p.add_hop(t.rx);
      deliver(p, p.hop_count >= 3);
    } else if (!t.backhaul) {
      p.add_hop(t.rx);
      if (scenario_.node(t.rx).kind == NodeKind::MIabDu) {
        const std::int64_t eligible = opts_.preemptive_bsr
                                          ? slot_ + 1
                                          : next_slot_with_role(PatternRow::IabBackhaul, slot_, SlotRole::Ul) + 1;
        bh_ul_queue_[p.source.value].push({p, slot_, eligible});
      } else {
        deliver(p, false);
      }
    } else if (t.dir == Direction::Dl) {
      const NodeId du = du_of_mt(scenario_, t.peer);
      p.add_hop(du);
      if (table_.serving(p.destination) == du)
        dl_queue_[p.destination.value].push({p, slot_, slot_ + 1});
      else
        route_dl(p, slot_, slot_ + 1);
    } else {
      p.add_hop(t.rx);
      deliver(p, true);
    }
  }
}

void Simulator::route_dl(Packet p, std::int64_t arrival, std::int64_t eligible) {
  const NodeId cell = table_.serving(p.destination);
  if (scenario_.node(cell).kind == NodeKind::MIabDu)
    bh_dl_queue_[p.destination.value].push({p, arrival, eligible});
  else
    dl_queue_[p.destination.value].push({p, arrival, eligible});
}

void Simulator::inject_traffic() {
  for (Packet& p : traffic_.generate(slot_)) {
    metrics_.on_generated(p);
    if (p.direction == Direction::Dl) {
      p.add_hop(anchor_of(scenario_, table_, p.destination));
      route_dl(p, slot_, slot_ + 1);
    } else {
      p.add_hop(p.source);
      ul_queue_[p.source.value].push({p, slot_, slot_ + 1});
    }
  }
}

void Simulator::step() {
  if (finished_) throw Error("simulation already finished");
  move_nodes();
  if (slot_ % opts_.epoch_slots == 0) build_world();
  channel_.begin_slot(slot_, world_);
  if (slot_ % cfg_.handover_eval_period_slots == 0) update_topology();

  const bool miab = cfg_.scenario_kind == ScenarioKind::MIab;
  std::vector<Transmission> txs;
  demanded_.clear();
  if (miab) {
    const SlotRole donor = slot_role(PatternRow::IabDonor, slot_);
    const SlotRole bh = slot_role(PatternRow::IabBackhaul, slot_);
    const SlotRole node = slot_role(PatternRow::IabNode, slot_);
    metrics_.on_role(std::string(to_string(PatternRow::IabDonor)), donor == SlotRole::Dl, donor == SlotRole::Ul);
    metrics_.on_role(std::string(to_string(PatternRow::IabBackhaul)), bh == SlotRole::Dl, bh == SlotRole::Ul);
    metrics_.on_role(std::string(to_string(PatternRow::IabNode)), node == SlotRole::Dl, node == SlotRole::Ul);
    for (NodeId d : scenario_.donors) schedule_cell(d, donor, bh, txs);
    for (const auto& bus : scenario_.bus_nodes)
      if (table_.servable(bus.du)) schedule_cell(bus.du, node, SlotRole::Silent, txs);
  } else {
    const SlotRole r = slot_role(PatternRow::MacroPico, slot_);
    metrics_.on_role(std::string(to_string(PatternRow::MacroPico)), r == SlotRole::Dl, r == SlotRole::Ul);
    for (NodeId d : scenario_.donors) schedule_cell(d, r, SlotRole::Silent, txs);
    for (NodeId p : scenario_.picos) schedule_cell(p, r, SlotRole::Silent, txs);
  }
  execute(txs);
  for (const auto& p : donor_profiles_) metrics_.on_donor_profile(p, slot_);
  inject_traffic();
  ++slot_;
}

void Simulator::run() {
  while (slot_ < cfg_.duration_slots) step();
  finish();
}

std::array<std::int64_t, 2> Simulator::queued_bits() const {
  std::array<std::int64_t, 2> out{};
  for (const auto* queues : {&dl_queue_, &bh_dl_queue_})
    for (const auto& q : *queues)
      for (const auto& p : q.packets()) out[0] += p.packet.size_bits;
  for (const auto* queues : {&ul_queue_, &bh_ul_queue_})
    for (const auto& q : *queues)
      for (const auto& p : q.packets()) out[1] += p.packet.size_bits;
  return out;
}

void Simulator::finish() {
  if (finished_) return;
  finished_ = true;
  for (const auto* queues : {&dl_queue_, &ul_queue_, &bh_dl_queue_, &bh_ul_queue_})
    for (const auto& q : *queues)
      for (const auto& p : q.packets()) metrics_.on_censored(p.packet);
  const auto queued = queued_bits();
  for (int d = 0; d < 2; ++d)
    if (metrics_.delivered_bits[d] + metrics_.dropped_bits[d] + queued[d] != metrics_.generated_bits[d])
      ++metrics_.audits.conservation;
  if (grants_out_) grants_out_->flush();
  if (links_out_) links_out_->flush();
}

nlohmann::json Simulator::manifest() const {
  nlohmann::json summary = {
      {"slots_simulated", slot_},
      {"generated_bits", {{"dl", metrics_.generated_bits[0]}, {"ul", metrics_.generated_bits[1]}}},
      {"delivered_bits", {{"dl", metrics_.delivered_bits[0]}, {"ul", metrics_.delivered_bits[1]}}},
      {"dropped_bits", {{"dl", metrics_.dropped_bits[0]}, {"ul", metrics_.dropped_bits[1]}}},
      {"handovers", handovers_},
      {"migrations", migrations_},
      {"pathloss_clamps", channel_.clamp_count()},
      {"mean_donor_access_fraction", metrics_.mean_access_fraction()}};
  return {{"build", kBuildId},
          {"config", to_json(cfg_)},
          {"options", opts_.to_json()},
          {"audits", metrics_.audits.to_json()},
          {"summary", summary}};
}

void Simulator::export_to(const std::filesystem::path& dir) const {
  metrics_.export_to(dir, manifest());
  std::ofstream out(dir / "attachment_events.csv", std::ios::binary);
  if (!out) throw IoError("cannot write attachment_events.csv");
  out << "slot,node,old_cell,new_cell,old_rsrp_dbm,new_rsrp_dbm\n";
  for (const auto& e : events_)
    out << e.slot << ',' << e.node.value << ',' << e.old_cell.value << ',' << e.new_cell.value << ','
        << format_double(e.old_rsrp_dbm, 3) << ',' << format_double(e.new_rsrp_dbm, 3) << '\n';
}

}  // namespace miab

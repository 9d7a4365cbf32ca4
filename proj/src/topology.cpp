#include "miab/topology.hpp"

#include <cmath>
#include <limits>

#include "miab/errors.hpp"

namespace miab {

NodeId evaluate_attachment(std::optional<NodeId> serving, std::span<const Candidate> candidates, double hysteresis_db) {
  if (candidates.empty()) throw NoCandidate("no eligible cell");
  const Candidate* best = &candidates[0];
  const Candidate* current = nullptr;
  for (const auto& c : candidates) {
    if (c.rsrp_dbm > best->rsrp_dbm || (c.rsrp_dbm == best->rsrp_dbm && c.cell < best->cell)) best = &c;
    if (serving && c.cell == *serving) current = &c;
  }
  if (current && !(best->rsrp_dbm > current->rsrp_dbm + hysteresis_db)) return current->cell;
  return best->cell;
}

double expected_dwell_s(const Vec3& ue, const Vec3& ue_v, const Vec3& cell, const Vec3& cell_v, double radius) {
  const double px = ue.x - cell.x, py = ue.y - cell.y;
  const double vx = ue_v.x - cell_v.x, vy = ue_v.y - cell_v.y;
  const double c = px * px + py * py - radius * radius;
  if (c >= 0) return 0.0;
  const double a = vx * vx + vy * vy;
  if (a <= 0) return std::numeric_limits<double>::infinity();
  const double b = 2 * (px * vx + py * vy);
  return (-b + std::sqrt(b * b - 4 * a * c)) / (2 * a);
}

bool admit_to_mobile_cell(const AdmissionPolicy& p, double rsrp_dbm, double dwell_s) {
  if (!p.enabled) return true;
  return rsrp_dbm >= p.min_rsrp_dbm && dwell_s >= p.min_dwell_s;
}

AttachmentTable::AttachmentTable(const Scenario& s)
    : scenario_(&s),
      serving_(s.size(), kNoNode),
      last_eval_(s.size(), -1),
      servable_(s.size(), false),
      iab_support_(s.size(), false) {
  for (const auto& d : s.nodes) {
    if (d.kind == NodeKind::IabDonor || d.kind == NodeKind::PicoGnb) servable_[d.id.value] = true;
    if (d.kind == NodeKind::IabDonor) iab_support_[d.id.value] = true;
  }
}

void AttachmentTable::attach(NodeId node, NodeId cell, std::int64_t slot) {
  const auto& n = scenario_->node(node);
  const auto& c = scenario_->node(cell);
  if (n.kind == NodeKind::MIabMt && c.kind != NodeKind::IabDonor)
    throw ConstraintViolation("an MT may only attach to an IAB donor");
  if (!is_cell(c.kind)) throw ConstraintViolation("attachment target is not a cell");
  serving_[node.value] = cell;
  last_eval_[node.value] = slot;
}

std::vector<NodeId> AttachmentTable::served_by(NodeId cell) const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < serving_.size(); ++i)
    if (serving_[i] == cell) out.push_back(NodeId{static_cast<std::uint32_t>(i)});
  return out;
}

NodeId integrate_miab_node(AttachmentTable& table, const Scenario& s, NodeId mt, std::span<const Candidate> donors,
                           std::int64_t slot) {
  std::vector<Candidate> eligible;
  for (const auto& c : donors)
    if (s.node(c.cell).kind == NodeKind::IabDonor && table.iab_support(c.cell)) eligible.push_back(c);
  const NodeId donor = evaluate_attachment(std::nullopt, eligible, 0.0);
  table.attach(mt, donor, slot);
  table.set_servable(du_of_mt(s, mt), true);
  return donor;
}

NodeId mt_of_du(const Scenario& s, NodeId du) {
  const auto& d = s.node(du);
  if (d.kind != NodeKind::MIabDu || !d.bus_id) return kNoNode;
  return s.bus_nodes[d.bus_id->value].mt;
}

NodeId du_of_mt(const Scenario& s, NodeId mt) {
  const auto& d = s.node(mt);
  if (d.kind != NodeKind::MIabMt || !d.bus_id) return kNoNode;
  return s.bus_nodes[d.bus_id->value].du;
}

NodeId anchor_of(const Scenario& s, const AttachmentTable& t, NodeId ue) {
  const NodeId cell = t.serving(ue);
  if (cell == kNoNode) return kNoNode;
  if (s.node(cell).kind == NodeKind::MIabDu) return t.serving(mt_of_du(s, cell));
  return cell;
}

Route dl_route(const Scenario& s, const AttachmentTable& t, NodeId ue) {
  Route r;
  const NodeId cell = t.serving(ue);
  if (cell == kNoNode) return r;
  if (s.node(cell).kind == NodeKind::MIabDu) r.hops.push_back(t.serving(mt_of_du(s, cell)));
  r.hops.push_back(cell);
  r.hops.push_back(ue);
  return r;
}

Route ul_route(const Scenario& s, const AttachmentTable& t, NodeId ue) {
  Route r;
  const NodeId cell = t.serving(ue);
  if (cell == kNoNode) return r;
  r.hops.push_back(ue);
  r.hops.push_back(cell);
  if (s.node(cell).kind == NodeKind::MIabDu) r.hops.push_back(t.serving(mt_of_du(s, cell)));
  return r;
}

DonorLinkProfile donor_link_profile(const Scenario& s, const AttachmentTable& t, NodeId donor) {
  DonorLinkProfile p;
  for (NodeId ue : s.ues)
    if (t.serving(ue) == donor) ++p.direct_ues;
  for (const auto& bus : s.bus_nodes) {
    if (bus.mt == kNoNode || t.serving(bus.mt) != donor) continue;
    ++p.attached_mts;
    for (NodeId ue : s.ues)
      if (t.serving(ue) == bus.du) ++p.backhaul_served_ues;
  }
  return p;
}

}  // namespace miab

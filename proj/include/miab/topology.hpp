#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "miab/geometry.hpp"
#include "miab/scenario.hpp"
#include "miab/types.hpp"

namespace miab {

struct Candidate {
  NodeId cell;
  double rsrp_dbm{0};
};

// Keeps `serving` unless a candidate beats it by more than the hysteresis;
// otherwise (or with no valid serving cell) the strongest candidate wins, ties
// by lowest cell id. Throws NoCandidate for an empty set.
NodeId evaluate_attachment(std::optional<NodeId> serving, std::span<const Candidate> candidates, double hysteresis_db);

struct AdmissionPolicy {
  bool enabled{false};
  double min_rsrp_dbm{-95.0};
  double min_dwell_s{2.0};
  double dwell_radius_m{25.0};
};

// Time until two constant-velocity points separate beyond `radius_m`;
// zero if already beyond, infinity if they never do.
double expected_dwell_s(const Vec3& ue, const Vec3& ue_velocity, const Vec3& cell, const Vec3& cell_velocity,
                        double radius_m);
bool admit_to_mobile_cell(const AdmissionPolicy& policy, double rsrp_dbm, double dwell_s);

struct AttachmentEvent {
  std::int64_t slot{0};
  NodeId node;
  NodeId old_cell{kNoNode};
  NodeId new_cell{kNoNode};
  double old_rsrp_dbm{0};
  double new_rsrp_dbm{0};
};

class AttachmentTable {
 public:
  explicit AttachmentTable(const Scenario& scenario);

  NodeId serving(NodeId node) const { return serving_[node.value]; }
  void attach(NodeId node, NodeId cell, std::int64_t slot);
  std::int64_t last_evaluation(NodeId node) const { return last_eval_[node.value]; }
  void mark_evaluated(NodeId node, std::int64_t slot) { last_eval_[node.value] = slot; }

  // A DU becomes servable once its MT has integrated.
  bool servable(NodeId cell) const { return servable_[cell.value]; }
  void set_servable(NodeId cell, bool v) { servable_[cell.value] = v; }

  // Advertised IAB support; donors only.
  bool iab_support(NodeId cell) const { return iab_support_[cell.value]; }
  void set_iab_support(NodeId cell, bool v) { iab_support_[cell.value] = v; }

  std::vector<NodeId> served_by(NodeId cell) const;

 private:
  const Scenario* scenario_;
  std::vector<NodeId> serving_;
  std::vector<std::int64_t> last_eval_;
  std::vector<bool> servable_;
  std::vector<bool> iab_support_;
};

// Attaches the MT to the strongest donor that advertises IAB support and makes
// its DU servable. Returns the chosen donor.
NodeId integrate_miab_node(AttachmentTable& table, const Scenario& scenario, NodeId mt,
                           std::span<const Candidate> donors, std::int64_t slot);

// Co-located parts of one mIAB node.
NodeId mt_of_du(const Scenario& s, NodeId du);
NodeId du_of_mt(const Scenario& s, NodeId mt);

// Donor (or pico) at which DL traffic for `ue` enters the radio network.
NodeId anchor_of(const Scenario& s, const AttachmentTable& t, NodeId ue);

// Ordered hop lists: DL anchor -> [mIAB node] -> UE, UL UE -> [mIAB node] -> anchor.
// The mIAB node appears by its serving part (DU) in both directions.
struct Route {
  std::vector<NodeId> hops;
  std::size_t length() const { return hops.empty() ? 0 : hops.size() - 1; }
};
Route dl_route(const Scenario& s, const AttachmentTable& t, NodeId ue);
Route ul_route(const Scenario& s, const AttachmentTable& t, NodeId ue);

struct DonorLinkProfile {
  int direct_ues{0};
  int attached_mts{0};
  int backhaul_served_ues{0};
  int total() const { return direct_ues + backhaul_served_ues; }
  double access_fraction() const { return total() > 0 ? static_cast<double>(direct_ues) / total() : 0.0; }
};
DonorLinkProfile donor_link_profile(const Scenario& s, const AttachmentTable& t, NodeId donor);

}  // namespace miab

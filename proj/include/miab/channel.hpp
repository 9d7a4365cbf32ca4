#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "miab/antenna.hpp"
#include "miab/geometry.hpp"
#include "miab/rng.hpp"
#include "miab/scenario.hpp"
#include "miab/types.hpp"

namespace miab {

enum class ChannelType : std::uint8_t { UMa, UMi, IndoorHotspot };
enum class LosState : std::uint8_t { Los, Nlos };

std::string_view to_string(ChannelType t);
std::string_view to_string(LosState s);

inline constexpr double kBusPenetrationDb = 40.1;
inline constexpr int kMaxPenetrations = 2;

struct LinkBudget {
  ChannelType channel_type{ChannelType::UMa};
  LosState los{LosState::Nlos};
  double distance_3d_m{0};
  double pathloss_db{0};
  double shadowing_db{0};
  double penetration_db{0};
  int crossings{0};
  double tx_array_gain_db{0};
  double rx_array_gain_db{0};
  double small_scale_db{0};
  bool clamped{false};

  // Large-scale loss excluding antenna gains.
  double loss_db() const { return pathloss_db + shadowing_db + penetration_db; }
};

// Order-insensitive mapping of node kinds to a channel family.
ChannelType classify_link(NodeKind a, NodeKind b);
ChannelType classify_link(const NodeDescriptor& a, const NodeDescriptor& b);

struct BusBody {
  Vec3 center;  // ground-level center of the body footprint
  double heading_rad{0};
  double length_m{12.0};
  double width_m{2.5};
  double height_m{3.2};

  bool contains(const Vec3& p) const;
};

// Number of bus bodies the segment a-b passes through or leaves/enters.
// A body holding both endpoints does not count.
// A roof-mounted endpoint sits outside its own body: that body counts only when
// the other endpoint is inside it.
int penetration_crossings(const Vec3& a, const Vec3& b, std::span<const BusBody> buses,
                          std::optional<std::size_t> roof_a = std::nullopt,
                          std::optional<std::size_t> roof_b = std::nullopt);
double penetration_db(int crossings);

// Minimum validity distances: 2D distance for the outdoor families, 3D for indoor.
double min_valid_distance_m(ChannelType t);

// 38.901 Table 7.4.1-1. fc in Hz, heights in meters. Throws RangeError below
// the validity distance.
double pathloss_db(ChannelType t, LosState los, double d3d_m, double fc_hz, double h_tx_m, double h_rx_m);

struct ClampedPathloss {
  double value_db;
  bool clamped;
};
// Same formula with the distance raised to the validity minimum.
ClampedPathloss pathloss_db_clamped(ChannelType t, LosState los, double d3d_m, double fc_hz, double h_tx_m,
                                    double h_rx_m);

double los_probability(ChannelType t, double d2d_m);

struct ShadowingParams {
  double sigma_db;
  double correlation_m;
};
ShadowingParams shadowing_params(ChannelType t, LosState los);
double los_correlation_m(ChannelType t);

// Unit-variance Gaussian process over displacement with exponential
// autocorrelation exp(-dd / correlation_m).
class CorrelatedGaussian {
 public:
  explicit CorrelatedGaussian(double correlation_m = 1.0) : corr_m_(correlation_m) {}
  double update(const Vec3& at, double fresh_normal);
  double value() const { return value_; }
  bool initialized() const { return init_; }

 private:
  double corr_m_;
  double value_{0};
  Vec3 last_;
  bool init_{false};
};

// Standard normal CDF.
double normal_cdf(double x);

// RSRP per resource element for the large-scale budget (no fast fading).
double per_re_power_dbm(double tx_power_dbm, int num_rbs);
double rsrp_dbm(const NodeDescriptor& tx, const LinkBudget& budget, int num_rbs);

// Per-slot geometry handed to the channel model.
struct WorldState {
  std::vector<Vec3> position;
  std::vector<Vec3> velocity;
  std::vector<Orientation> orientation;
  std::vector<BusBody> bodies;
};

struct ChannelOptions {
  int epoch_slots{10};
  bool fast_fading{true};
  double rician_k_db{10.0};
  double min_doppler_speed_mps{3.0 / 3.6};
};

// Spatially consistent large-scale state and per-pair fading for one
// simulation instance. Large-scale values and beam gains are refreshed once
// per epoch and evaluated lazily.
class ChannelModel {
 public:
  ChannelModel(const Scenario& scenario, std::uint64_t seed, ChannelOptions opts = {});

  // Installs the geometry of `slot`; starts a new epoch on epoch boundaries.
  void begin_slot(std::int64_t slot, const WorldState& world);

  // Large-scale budget, reciprocal; antenna gains left at zero.
  const LinkBudget& large_scale(NodeId a, NodeId b);
  // Linear gain of the large-scale budget, 10^(-loss_db/10).
  double path_gain_lin(NodeId a, NodeId b);
  // Element plus array gain of `node` beamformed at `steer_to`, toward `toward`.
  double beam_gain_db(NodeId node, NodeId steer_to, NodeId toward);
  double beam_gain_lin(NodeId node, NodeId steer_to, NodeId toward);
  // Full budget with matched beams at both ends.
  LinkBudget link_budget(NodeId tx, NodeId rx);
  double rsrp_dbm(NodeId cell, NodeId node);
  // Power gain of the per-pair small-scale fading at `slot` (mean 1).
  double fading_gain(NodeId a, NodeId b, std::int64_t slot);

  long long clamp_count() const { return clamp_count_; }
  std::int64_t epoch() const { return epoch_; }
  const WorldState& world() const { return world_; }
  double wavelength_m() const { return wavelength_; }

 private:
  struct PairState {
    std::int64_t epoch{-1};
    CorrelatedGaussian los_field, shadow_los, shadow_nlos;
    LinkBudget budget;
    double gain_lin{0};
    std::complex<double> diffuse{0, 0};
    std::int64_t fading_slot{-1};
    double los_phase{0};
    double fading_cache{1.0};
    double rho_step{0};
    std::int64_t rho_epoch{-1};
  };

  std::size_t pair_index(NodeId a, NodeId b) const;
  void refresh(PairState& p, NodeId a, NodeId b, std::size_t index);

  const Scenario& scenario_;
  std::uint64_t seed_;
  ChannelOptions opts_;
  double wavelength_;
  std::int64_t slot_{0};
  std::int64_t epoch_{-1};
  WorldState world_;
  std::vector<PairState> pairs_;
  std::vector<std::int64_t> gain_row_epoch_;
  std::vector<double> gain_rows_;
  long long clamp_count_{0};
};

}  // namespace miab

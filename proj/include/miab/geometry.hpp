#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "miab/rng.hpp"

namespace miab {

struct Vec3 {
  double x{0}, y{0}, z{0};

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  bool operator==(const Vec3&) const = default;
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

double distance_3d(const Vec3& a, const Vec3& b);
double distance_2d(const Vec3& a, const Vec3& b);

// Rotates the horizontal components by `angle` radians (counter-clockwise).
Vec3 rotate_z(const Vec3& v, double angle);

// Axis-aligned unit heading on the grid.
struct Heading {
  int dx{1}, dy{0};
  bool operator==(const Heading&) const = default;
  Heading right() const { return {dy, -dx}; }
  Heading left() const { return {-dy, dx}; }
  double angle() const { return std::atan2(static_cast<double>(dy), static_cast<double>(dx)); }
};

enum class Turn { Straight, Left, Right };

// Simplified Madrid grid: 3x3 square blocks with sidewalks, separated and
// surrounded by four-lane streets. Origin at the grid center.
struct GridLayout {
  double block_side_m{120.0};
  double sidewalk_width_m{3.0};
  double street_width_m{14.0};
  int blocks_per_side{3};

  double pitch() const { return block_side_m + 2 * sidewalk_width_m + street_width_m; }
  double half_extent() const;
  std::vector<double> block_centers() const;
  std::vector<double> street_centers() const;
  // Lateral distance of each lane centerline from its street center (one side).
  std::vector<double> lane_offsets() const;
  // Sidewalk centerlines, shared by both axes, ascending.
  std::vector<double> walkway_lines() const;
  double intersection_half() const { return street_width_m / 2 + sidewalk_width_m; }

  bool contains(const Vec3& p) const;
  bool in_intersection(double x, double y) const;
  bool on_sidewalk(double x, double y) const;
  bool on_lane_centerline(double x, double y) const;
};

enum class TrackKind { Lane, Walkway };

struct MobileState {
  Vec3 position;
  Heading heading;
  TrackKind track{TrackKind::Lane};
  double lane_offset_m{0};  // lanes only
  double speed_mps{0};
  // Next event along the travel axis: a turn decision at the junction, then
  // possibly the turn itself at the lane crossing point.
  double junction{0};
  double decision_at{0};
  bool turn_pending{false};
  Turn pending_turn{Turn::Straight};
  double turn_at{0};
};

// Picks a turn for uniform u in [0, 1) from the 0.6/0.2/0.2 split, renormalized
// over the feasible options (ordered Straight, Left, Right).
Turn draw_turn(double u, bool straight_ok, bool left_ok, bool right_ok);

// Tally of turn decisions taken where all three options were feasible.
struct TurnCounts {
  long long straight{0}, left{0}, right{0};
};

// Sets up the next decision point; the state must be on a track.
void plan_next_junction(const GridLayout& layout, MobileState& s);
void advance(const GridLayout& layout, MobileState& s, double distance, Rng& rng,
             TurnCounts* counts = nullptr);
void step_mobility(const GridLayout& layout, std::span<MobileState> states, double dt, Rng& rng);

// Random placement on a lane outside intersections (buses) or on a sidewalk
// segment (pedestrians). Both directions are equally likely.
MobileState spawn_on_lane(const GridLayout& layout, Rng& rng, double speed_mps);
MobileState spawn_on_sidewalk(const GridLayout& layout, Rng& rng, double speed_mps, double height_m);

}  // namespace miab

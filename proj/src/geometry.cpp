#include "miab/geometry.hpp"

#include <algorithm>

#include "miab/errors.hpp"

namespace miab {

namespace {

constexpr double kEps = 1e-9;

double axis_coord(const MobileState& s) { return s.heading.dx != 0 ? s.position.x : s.position.y; }
double lateral_coord(const MobileState& s) { return s.heading.dx != 0 ? s.position.y : s.position.x; }
int axis_sign(const Heading& h) { return h.dx + h.dy; }

void set_axis_coord(MobileState& s, double v) {
  if (s.heading.dx != 0)
    s.position.x = v;
  else
    s.position.y = v;
}

std::vector<double> junctions(const GridLayout& layout, TrackKind track) {
  return track == TrackKind::Lane ? layout.street_centers() : layout.walkway_lines();
}

double decision_point(const GridLayout& layout, const MobileState& s, double junction) {
  if (s.track == TrackKind::Walkway) return junction;
  return junction - axis_sign(s.heading) * layout.street_width_m / 2;
}

// True if a junction lies beyond `from` along heading h by more than an
// intersection half-width.
bool has_junction_ahead(const std::vector<double>& js, double from, int sign, double margin) {
  return std::any_of(js.begin(), js.end(), [&](double j) { return sign * (j - from) > margin; });
}

}  // namespace

double distance_3d(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

double distance_2d(const Vec3& a, const Vec3& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Vec3 rotate_z(const Vec3& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

double GridLayout::half_extent() const {
  return street_centers().back() + street_width_m / 2 + sidewalk_width_m;
}

std::vector<double> GridLayout::block_centers() const {
  std::vector<double> out;
  for (int i = 0; i < blocks_per_side; ++i) out.push_back((i - (blocks_per_side - 1) / 2.0) * pitch());
  return out;
}

std::vector<double> GridLayout::street_centers() const {
  std::vector<double> out;
  const auto blocks = block_centers();
  out.push_back(blocks.front() - pitch() / 2);
  for (double b : blocks) out.push_back(b + pitch() / 2);
  return out;
}

std::vector<double> GridLayout::lane_offsets() const {
  const double lane = street_width_m / 4;
  return {lane / 2, lane * 1.5};
}

std::vector<double> GridLayout::walkway_lines() const {
  std::vector<double> out;
  const double off = block_side_m / 2 + sidewalk_width_m / 2;
  for (double b : block_centers()) {
    out.push_back(b - off);
    out.push_back(b + off);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool GridLayout::contains(const Vec3& p) const {
  const double h = half_extent() + kEps;
  return std::abs(p.x) <= h && std::abs(p.y) <= h;
}

bool GridLayout::in_intersection(double x, double y) const {
  const double h = intersection_half() + kEps;
  bool in_x = false, in_y = false;
  for (double c : street_centers()) {
    in_x = in_x || std::abs(x - c) <= h;
    in_y = in_y || std::abs(y - c) <= h;
  }
  return in_x && in_y;
}

bool GridLayout::on_sidewalk(double x, double y) const {
  const double inner = block_side_m / 2 - kEps;
  const double outer = block_side_m / 2 + sidewalk_width_m + kEps;
  for (double bx : block_centers())
    for (double by : block_centers()) {
      const double d = std::max(std::abs(x - bx), std::abs(y - by));
      if (d >= inner && d <= outer) return true;
    }
  return false;
}

bool GridLayout::on_lane_centerline(double x, double y) const {
  const double h = half_extent() + kEps;
  if (std::abs(x) > h || std::abs(y) > h) return false;
  for (double c : street_centers())
    for (double o : lane_offsets())
      for (double sgn : {-1.0, 1.0}) {
        const double line = c + sgn * o;
        if (std::abs(x - line) < 1e-6 || std::abs(y - line) < 1e-6) return true;
      }
  return false;
}

Turn draw_turn(double u, bool straight_ok, bool left_ok, bool right_ok) {
  const double w[3] = {straight_ok ? 0.6 : 0.0, left_ok ? 0.2 : 0.0, right_ok ? 0.2 : 0.0};
  const double total = w[0] + w[1] + w[2];
  if (total <= 0) throw GeometryError("no feasible direction at junction");
  double acc = 0;
  const Turn order[3] = {Turn::Straight, Turn::Left, Turn::Right};
  int last = 0;
  for (int i = 0; i < 3; ++i) {
    if (w[i] <= 0) continue;
    last = i;
    acc += w[i] / total;
    if (u < acc) return order[i];
  }
  return order[last];
}

void plan_next_junction(const GridLayout& layout, MobileState& s) {
  const auto js = junctions(layout, s.track);
  const int sign = axis_sign(s.heading);
  const double a = axis_coord(s);
  bool found = false;
  double best = 0;
  for (double j : js) {
    const double d = decision_point(layout, s, j);
    if (sign * (d - a) > kEps && (!found || sign * (d - best) < 0)) {
      best = d;
      s.junction = j;
      found = true;
    }
  }
  if (!found) throw GeometryError("mobile would leave the grid");
  s.decision_at = best;
  s.turn_pending = false;
}

namespace {

void decide(const GridLayout& layout, MobileState& s, Rng& rng, TurnCounts* counts) {
  const auto js = junctions(layout, s.track);
  const double margin = layout.intersection_half();
  const int sign = axis_sign(s.heading);
  const double lat = lateral_coord(s);
  const bool straight_ok = has_junction_ahead(js, s.junction, sign, margin);
  const bool left_ok = has_junction_ahead(js, lat, axis_sign(s.heading.left()), margin);
  const bool right_ok = has_junction_ahead(js, lat, axis_sign(s.heading.right()), margin);
  const Turn t = draw_turn(rng.uniform(), straight_ok, left_ok, right_ok);
  if (counts && straight_ok && left_ok && right_ok) {
    if (t == Turn::Straight) ++counts->straight;
    if (t == Turn::Left) ++counts->left;
    if (t == Turn::Right) ++counts->right;
  }
  if (t == Turn::Straight) {
    plan_next_junction(layout, s);
    return;
  }
  s.turn_pending = true;
  s.pending_turn = t;
  const double o = s.track == TrackKind::Lane ? s.lane_offset_m : 0.0;
  s.turn_at = t == Turn::Right ? s.junction - sign * o : s.junction + sign * o;
}

void execute_turn(const GridLayout& layout, MobileState& s) {
  const double along = s.turn_at;
  const double lat = lateral_coord(s);
  s.heading = s.pending_turn == Turn::Right ? s.heading.right() : s.heading.left();
  // The old lateral line becomes the new travel-axis coordinate.
  if (s.heading.dx != 0) {
    s.position.x = lat;
    s.position.y = along;
  } else {
    s.position.y = lat;
    s.position.x = along;
  }
  plan_next_junction(layout, s);
}

}  // namespace

void advance(const GridLayout& layout, MobileState& s, double distance, Rng& rng, TurnCounts* counts) {
  for (int guard = 0; distance > 0; ++guard) {
    if (guard > 1000) throw GeometryError("mobility step did not converge");
    const int sign = axis_sign(s.heading);
    const double target = s.turn_pending ? s.turn_at : s.decision_at;
    const double a = axis_coord(s);
    const double gap = sign * (target - a);
    if (gap > distance) {
      set_axis_coord(s, a + sign * distance);
      return;
    }
    set_axis_coord(s, target);
    distance -= std::max(gap, 0.0);
    if (s.turn_pending)
      execute_turn(layout, s);
    else
      decide(layout, s, rng, counts);
  }
}

void step_mobility(const GridLayout& layout, std::span<MobileState> states, double dt, Rng& rng) {
  for (auto& s : states) advance(layout, s, s.speed_mps * dt, rng);
}

MobileState spawn_on_lane(const GridLayout& layout, Rng& rng, double speed_mps) {
  const auto streets = layout.street_centers();
  const auto offsets = layout.lane_offsets();
  MobileState s;
  s.track = TrackKind::Lane;
  s.speed_mps = speed_mps;
  const bool vertical = rng.uniform() < 0.5;
  const int sign = rng.uniform() < 0.5 ? 1 : -1;
  s.heading = vertical ? Heading{0, sign} : Heading{sign, 0};
  s.lane_offset_m = offsets[rng.below(offsets.size())];
  const double street = streets[rng.below(streets.size())];
  const std::size_t seg = rng.below(streets.size() - 1);
  const double margin = layout.intersection_half() + 6.0;
  const double lo = streets[seg] + margin, hi = streets[seg + 1] - margin;
  const double along = lo + (hi - lo) * rng.uniform();
  const Heading r = s.heading.right();
  const double lateral = street + s.lane_offset_m * (vertical ? r.dx : r.dy);
  s.position = vertical ? Vec3{lateral, along, 0} : Vec3{along, lateral, 0};
  plan_next_junction(layout, s);
  return s;
}

MobileState spawn_on_sidewalk(const GridLayout& layout, Rng& rng, double speed_mps, double height_m) {
  const auto lines = layout.walkway_lines();
  MobileState s;
  s.track = TrackKind::Walkway;
  s.speed_mps = speed_mps;
  const bool vertical = rng.uniform() < 0.5;
  const int sign = rng.uniform() < 0.5 ? 1 : -1;
  s.heading = vertical ? Heading{0, sign} : Heading{sign, 0};
  const double line = lines[rng.below(lines.size())];
  // Sidewalk segments run between the two corners of one block side.
  std::vector<std::pair<double, double>> segs;
  for (std::size_t i = 0; i + 1 < lines.size(); ++i)
    if (lines[i + 1] - lines[i] > 2 * layout.intersection_half()) segs.emplace_back(lines[i], lines[i + 1]);
  const auto [lo, hi] = segs[rng.below(segs.size())];
  double along = lo + (hi - lo) * rng.uniform();
  along = std::clamp(along, lo + 1e-3, hi - 1e-3);
  s.position = vertical ? Vec3{line, along, height_m} : Vec3{along, line, height_m};
  plan_next_junction(layout, s);
  return s;
}

}  // namespace miab

#include "miab/antenna.hpp"

#include <algorithm>
#include <cmath>

namespace miab {

namespace {

constexpr double kDeg = M_PI / 180.0;

// |sum_{m<M} exp(j*pi*m*delta)|^2 in closed form.
double linear_array_power(int m, double delta) {
  const double den = std::sin(M_PI * delta / 2);
  if (std::abs(den) < 1e-12) return static_cast<double>(m) * m;
  const double num = std::sin(m * M_PI * delta / 2);
  return (num * num) / (den * den);
}

// Phase coordinates of a local direction on the horizontal and vertical panel axes.
double u_h(const LocalAngles& a) { return std::sin(a.zenith) * std::sin(a.azimuth); }
double u_v(const LocalAngles& a) { return std::cos(a.zenith); }

}  // namespace

int num_elements(ArrayType a) {
  switch (a) {
    case ArrayType::Ura8x8: return 64;
    case ArrayType::Ula64: return 64;
    case ArrayType::SingleAntenna: return 1;
  }
  return 1;
}

LocalAngles to_local(const Vec3& d, const Orientation& o) {
  const double n = d.norm();
  if (n <= 0) return {};
  const double ca = std::cos(o.azimuth_rad), sa = std::sin(o.azimuth_rad);
  const double x1 = (ca * d.x + sa * d.y) / n;
  const double y1 = (-sa * d.x + ca * d.y) / n;
  const double z1 = d.z / n;
  const double cb = std::cos(o.downtilt_rad), sb = std::sin(o.downtilt_rad);
  const double x2 = cb * x1 - sb * z1;
  const double z2 = sb * x1 + cb * z1;
  return {std::acos(std::clamp(z2, -1.0, 1.0)), std::atan2(y1, x2)};
}

double element_gain_dbi(ElementPattern p, double max_gain_dbi, const LocalAngles& a) {
  if (p == ElementPattern::Omni) return max_gain_dbi;
  const double theta = a.zenith / kDeg;
  const double phi = a.azimuth / kDeg;
  const double av = -std::min(12.0 * std::pow((theta - 90.0) / 65.0, 2), 30.0);
  const double ah = -std::min(12.0 * std::pow(phi / 65.0, 2), 30.0);
  return -std::min(-(av + ah), 30.0) + max_gain_dbi;
}

double array_gain(ArrayType a, const LocalAngles& steer, const LocalAngles& eval) {
  switch (a) {
    case ArrayType::SingleAntenna: return 1.0;
    case ArrayType::Ula64: return linear_array_power(64, u_h(eval) - u_h(steer)) / 64.0;
    case ArrayType::Ura8x8:
      return linear_array_power(8, u_h(eval) - u_h(steer)) * linear_array_power(8, u_v(eval) - u_v(steer)) / 64.0;
  }
  return 1.0;
}

std::vector<std::complex<double>> steering_vector(ArrayType a, const LocalAngles& dir) {
  std::vector<std::complex<double>> v;
  const double uh = u_h(dir), uv = u_v(dir);
  const int nh = a == ArrayType::Ura8x8 ? 8 : num_elements(a);
  const int nv = a == ArrayType::Ura8x8 ? 8 : 1;
  for (int m = 0; m < nh; ++m)
    for (int n = 0; n < nv; ++n) v.push_back(std::polar(1.0, M_PI * (m * uh + n * uv)));
  return v;
}

double beam_gain_db(ArrayType a, ElementPattern p, double max_gain_dbi, const Orientation& o, const Vec3& steer_dir,
                    const Vec3& eval_dir) {
  const LocalAngles e = to_local(eval_dir, o);
  const double g = element_gain_dbi(p, max_gain_dbi, e);
  if (a == ArrayType::SingleAntenna) return g;
  return g + 10.0 * std::log10(std::max(array_gain(a, to_local(steer_dir, o), e), 1e-30));
}

}  // namespace miab

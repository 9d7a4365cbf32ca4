#pragma once

#include <complex>
#include <vector>

#include "miab/geometry.hpp"

namespace miab {

enum class ArrayType { Ura8x8, Ula64, SingleAntenna };
enum class ElementPattern { ThreeGpp3d, Omni };

int num_elements(ArrayType a);

// Pointing of an antenna panel: boresight azimuth (counter-clockwise from +x)
// and mechanical downtilt, both radians.
struct Orientation {
  double azimuth_rad{0};
  double downtilt_rad{0};
};

// Direction in the panel frame; zenith 90 deg is the boresight plane.
struct LocalAngles {
  double zenith{M_PI / 2};
  double azimuth{0};
};

LocalAngles to_local(const Vec3& direction, const Orientation& o);

// Element gain in dBi (3GPP TR 38.901 Table 7.3-1 pattern, 65 deg HPBW,
// 30 dB front-to-back) or flat `max_gain_dbi` for omni elements.
double element_gain_dbi(ElementPattern p, double max_gain_dbi, const LocalAngles& a);

// Power gain (linear, at most the element count) of a matched-filter beam
// steered toward `steer`, evaluated toward `eval`. Half-wavelength spacing;
// the URA spans the panel's horizontal and vertical axes, the ULA the
// horizontal axis.
double array_gain(ArrayType a, const LocalAngles& steer, const LocalAngles& eval);

// Explicit steering vector, element order (horizontal index, vertical index).
std::vector<std::complex<double>> steering_vector(ArrayType a, const LocalAngles& dir);

// Combined element + array gain in dB toward `eval_dir` with the beam pointed
// at `steer_dir` (global direction vectors).
double beam_gain_db(ArrayType a, ElementPattern p, double max_gain_dbi, const Orientation& o,
                    const Vec3& steer_dir, const Vec3& eval_dir);

}  // namespace miab

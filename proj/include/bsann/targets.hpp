#pragma once

#include <array>
#include <vector>

#include "bsann/acoustic_model.hpp"
#include "bsann/losses.hpp"

namespace bsann::targets {

// Mean magnitude over [f / 2^(1/6), f * 2^(1/6)] around every bin.
std::vector<double> third_octave_smooth(std::span<const double> mag, const FrequencyGrid& grid);

// Per ear (L1, R1, L2, R2): the nearest driver of each band present.
std::array<std::vector<int>, acoustic::kNumEars> nearest_band_drivers(
    const std::vector<acoustic::DriverSpec>& drivers,
    const std::array<acoustic::ListenerGeometry, 2>& listeners);

// |p_T| per (ear, point): the summed direct-path magnitudes of the ear's
// nearest drivers, third-octave smoothed, divided by the value at 1 kHz.
losses::TargetSpec build_bright_targets(
    const acoustic::AtfTensor& direct,
    const std::array<std::vector<int>, acoustic::kNumEars>& drivers_per_ear);

// Diagonal magnitudes of the teacher's ear matrices, floored at epsilon.
losses::XtcTargets capture_xtc_targets(const acoustic::AtfTensor& atf, const nn::FilterBank& teacher,
                                       double epsilon);

}  // namespace bsann::targets

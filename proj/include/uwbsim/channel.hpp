// Free-space propagation, multipath taps and receiver-side superposition.
#pragma once

#include "uwbsim/signal.hpp"
#include "uwbsim/units.hpp"

#include <cstdint>
#include <vector>

namespace uwbsim {

struct NodePosition {
    double x = 0.0; // meters
    double y = 0.0;
};

double distance_m(const NodePosition& a, const NodePosition& b);

struct MultipathTap {
    int delayChips = 0;
    double amplitude = 0.0; // relative to the direct path
};

struct ChannelParams {
    double pathLossExponent = 2.0;
    double referenceLossAt1m = 1.0;  // received/transmitted power ratio at 1 m
    double noisePowerDensity = 0.0;  // per-chip noise variance
    double propagationSpeedMps = kSpeedOfLightMps;
    std::uint64_t rngSeed = 1;
    std::vector<MultipathTap> taps;  // empty = single path

    void validate() const;
};

namespace channel {

// Received amplitude scale at given distance (sqrt of the power path loss);
// distance 0 passes through unscaled.
double path_amplitude_scale(double distanceMeters, const ChannelParams& params);

// Delay by round(distance/c) ps, scale amplitude, apply multipath taps.
BasebandSignal propagate(const BasebandSignal& signal,
                         const NodePosition& from,
                         const NodePosition& to,
                         const ChannelParams& params);

// Sample-wise sum of all signals overlapping [windowStartPs, windowStartPs +
// windowChips * chipPeriod), aligned to the window chip grid (sub-chip start
// residuals round to the nearest chip), plus Gaussian noise with variance
// noisePowerDensity seeded by (rngSeed, windowStartPs). Signals that do not
// overlap the window are dropped. Field annotations are taken from `base`
// (index into signals) whose metadata the window inherits.
BasebandSignal superpose(const std::vector<BasebandSignal>& signals,
                         TimePs windowStartPs,
                         std::int64_t windowChips,
                         const ChannelParams& params,
                         std::size_t base = 0);

} // namespace channel
} // namespace uwbsim

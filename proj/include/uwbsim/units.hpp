// Time base, chip-rate constants and conversions shared by every module.
#pragma once

#include <cmath>
#include <cstdint>

namespace uwbsim {

// Global simulation clock is integer picoseconds (unsigned, wraps after ~213 days).
using TimePs = std::uint64_t;
using TimeDeltaPs = std::int64_t;

// Nominal HRP chip rate. One sample per chip, one pulse occupies one chip.
inline constexpr double kChipRateHz = 499.2e6;
inline constexpr double kPsPerChip = 1e12 / kChipRateHz; // ~2003.205 ps

// One ternary code symbol occupies this many chips; the pulse sits on the
// first chip of the symbol, the rest are silent.
inline constexpr int kChipsPerSymbol = 4;

// Speed of light, exact by definition.
inline constexpr double kSpeedOfLightMps = 299792458.0;
inline constexpr double kPsPerMeter = 1e12 / kSpeedOfLightMps;

inline TimePs chips_to_ps(std::int64_t chips) {
    return static_cast<TimePs>(std::llround(static_cast<double>(chips) * kPsPerChip));
}

inline std::int64_t ps_to_chips_round(double ps) {
    return std::llround(ps / kPsPerChip);
}

inline TimePs us_to_ps(double us) { return static_cast<TimePs>(std::llround(us * 1e6)); }
inline TimePs ms_to_ps(double ms) { return static_cast<TimePs>(std::llround(ms * 1e9)); }
inline double ps_to_us(TimeDeltaPs ps) { return static_cast<double>(ps) * 1e-6; }

inline TimePs meters_to_tof_ps(double meters) {
    return static_cast<TimePs>(std::llround(meters * kPsPerMeter));
}

} // namespace uwbsim

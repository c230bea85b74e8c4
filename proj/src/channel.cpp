#include "uwbsim/channel.hpp"

#include "uwbsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uwbsim {

double distance_m(const NodePosition& a, const NodePosition& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

void ChannelParams::validate() const {
    if (!(pathLossExponent >= 1.0)) throw std::invalid_argument("pathLossExponent must be >= 1");
    if (!(noisePowerDensity >= 0.0)) throw std::invalid_argument("noisePowerDensity must be >= 0");
    if (propagationSpeedMps != kSpeedOfLightMps)
        throw std::invalid_argument("propagationSpeed must be the speed of light");
    if (!(referenceLossAt1m > 0.0)) throw std::invalid_argument("referenceLossAt1m must be > 0");
    for (const auto& tap : taps) {
        if (tap.delayChips <= 0) throw std::invalid_argument("multipath tap delay must be positive");
        if (!(tap.amplitude > 0.0)) throw std::invalid_argument("multipath tap amplitude must be positive");
    }
}

namespace channel {

double path_amplitude_scale(double distanceMeters, const ChannelParams& params) {
    if (distanceMeters <= 0.0) return 1.0;
    const double powerRatio =
        params.referenceLossAt1m / std::pow(distanceMeters, params.pathLossExponent);
    return std::sqrt(powerRatio);
}

BasebandSignal propagate(const BasebandSignal& signal,
                         const NodePosition& from,
                         const NodePosition& to,
                         const ChannelParams& params) {
    const double d = distance_m(from, to);
    const double scale = path_amplitude_scale(d, params);
    BasebandSignal out = signal;
    out.startTimePs = signal.startTimePs + meters_to_tof_ps(d);
    if (params.taps.empty()) {
        for (double& s : out.samples) s *= scale;
        return out;
    }
    // Tapped delay line: direct path plus attenuated echoes.
    std::int64_t maxDelay = 0;
    for (const auto& tap : params.taps) maxDelay = std::max<std::int64_t>(maxDelay, tap.delayChips);
    std::vector<double> acc(signal.samples.size() + static_cast<std::size_t>(maxDelay), 0.0);
    for (std::size_t i = 0; i < signal.samples.size(); ++i) acc[i] = signal.samples[i] * scale;
    for (const auto& tap : params.taps)
        for (std::size_t i = 0; i < signal.samples.size(); ++i)
            acc[i + static_cast<std::size_t>(tap.delayChips)] += signal.samples[i] * scale * tap.amplitude;
    out.samples = std::move(acc);
    return out;
}

BasebandSignal superpose(const std::vector<BasebandSignal>& signals,
                         TimePs windowStartPs,
                         std::int64_t windowChips,
                         const ChannelParams& params,
                         std::size_t base) {
    if (windowChips <= 0) throw std::invalid_argument("window must be non-empty");
    BasebandSignal out;
    out.samples.assign(static_cast<std::size_t>(windowChips), 0.0);
    out.startTimePs = windowStartPs;
    if (base < signals.size()) {
        const auto& b = signals[base];
        out.fieldBoundaries = b.fieldBoundaries;
        out.channel = b.channel;
        out.txPacSymbols = b.txPacSymbols;
        out.baseOffsetChips =
            ps_to_chips_round(static_cast<double>(b.startTimePs) - static_cast<double>(windowStartPs));
    }
    for (const auto& sig : signals) {
        // Sub-chip start residuals round to the window chip grid.
        const std::int64_t offset =
            ps_to_chips_round(static_cast<double>(sig.startTimePs) - static_cast<double>(windowStartPs));
        const std::int64_t from = std::max<std::int64_t>(0, -offset);
        const std::int64_t to =
            std::min<std::int64_t>(sig.lengthChips(), windowChips - offset);
        for (std::int64_t i = from; i < to; ++i)
            out.samples[static_cast<std::size_t>(i + offset)] += sig.samples[static_cast<std::size_t>(i)];
    }
    if (params.noisePowerDensity > 0.0) {
        const double sigma = std::sqrt(params.noisePowerDensity);
        SplitMix64 gen(mix_seed(params.rngSeed, 0x4E015EULL, windowStartPs));
        for (double& s : out.samples) s += sigma * gen.next_gaussian();
    }
    return out;
}

} // namespace channel
} // namespace uwbsim

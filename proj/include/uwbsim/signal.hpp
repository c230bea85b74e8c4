// Chip-rate baseband signal representation and per-field power profile.
#pragma once

#include "uwbsim/units.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace uwbsim {

struct FieldSpan {
    std::string name;     // "SYNC", "SFD", "STS", "PHD", "PAYLOAD"
    std::int64_t startChip = 0;
    std::int64_t endChip = 0; // exclusive
};

struct BasebandSignal {
    std::vector<double> samples; // real amplitude, one sample per chip
    TimePs startTimePs = 0;      // absolute time of samples[0]
    std::vector<FieldSpan> fieldBoundaries;

    // Plumbing carried with the waveform so a receiver window can reproduce
    // the COTS-chip oracle behaviour (channel tuning, PAC gating) and align
    // its correlation search.
    int channel = 0;
    int txPacSymbols = 0;
    std::int64_t baseOffsetChips = 0; // offset of the packet start inside samples

    std::int64_t lengthChips() const { return static_cast<std::int64_t>(samples.size()); }
    double meanSquarePower(std::int64_t startChip, std::int64_t endChip) const;
    double fieldMeanSquarePower(const std::string& fieldName) const;
    const FieldSpan* findField(const std::string& fieldName) const;
};

// Per-field amplitude gain, 1.0 = nominal regulatory power.
struct PowerProfile {
    double sync = 1.0;
    double sfd = 1.0;
    double sts = 1.0;
    double phd = 1.0;
    double payload = 1.0;

    // Profile used by the jammer: only SYNC is amplified.
    static PowerProfile jam_sync(double syncAmplitudeGain);

    void validate() const; // all gains > 0
};

} // namespace uwbsim

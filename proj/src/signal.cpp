#include "uwbsim/signal.hpp"

#include <algorithm>
#include <stdexcept>

namespace uwbsim {

double BasebandSignal::meanSquarePower(std::int64_t startChip, std::int64_t endChip) const {
    startChip = std::max<std::int64_t>(startChip, 0);
    endChip = std::min<std::int64_t>(endChip, lengthChips());
    if (endChip <= startChip) return 0.0;
    double acc = 0.0;
    for (std::int64_t i = startChip; i < endChip; ++i) acc += samples[static_cast<std::size_t>(i)] * samples[static_cast<std::size_t>(i)];
    return acc / static_cast<double>(endChip - startChip);
}

const FieldSpan* BasebandSignal::findField(const std::string& fieldName) const {
    for (const auto& span : fieldBoundaries)
        if (span.name == fieldName) return &span;
    return nullptr;
}

double BasebandSignal::fieldMeanSquarePower(const std::string& fieldName) const {
    const FieldSpan* span = findField(fieldName);
    if (!span) throw std::invalid_argument("no field named " + fieldName);
    return meanSquarePower(span->startChip, span->endChip);
}

PowerProfile PowerProfile::jam_sync(double syncAmplitudeGain) {
    PowerProfile p;
    p.sync = syncAmplitudeGain;
    return p;
}

void PowerProfile::validate() const {
    for (double g : {sync, sfd, sts, phd, payload})
        if (!(g > 0.0)) throw std::invalid_argument("power profile gains must be positive");
}

} // namespace uwbsim

#include "uwbsim/ranging.hpp"

#include "uwbsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uwbsim {

const char* to_string(PacketRole role) {
    switch (role) {
        case PacketRole::Poll: return "poll";
        case PacketRole::Response: return "response";
        case PacketRole::Final: return "final";
    }
    return "?";
}

const char* to_string(SessionStatus status) {
    switch (status) {
        case SessionStatus::Completed: return "Completed";
        case SessionStatus::DroppedPoll: return "Dropped(poll)";
        case SessionStatus::DroppedResponse: return "Dropped(response)";
        case SessionStatus::DroppedFinal: return "Dropped(final)";
    }
    return "?";
}

bool is_dropped(SessionStatus status) { return status != SessionStatus::Completed; }

bool RangingRecord::validate_ordering() const {
    TimePs prev = 0;
    bool havePrev = false;
    for (const auto& stamp : {pollTx, pollRx, responseTx, responseRx, finalTx, finalRx}) {
        if (!stamp) continue;
        if (havePrev && *stamp <= prev) return false;
        prev = *stamp;
        havePrev = true;
    }
    return true;
}

void SessionSchedule::validate() const {
    if (!(pollToResponseUs > 0)) throw std::invalid_argument("poll->response delay must be positive");
    if (!(pollToResponseUs < pollToFinalUs))
        throw std::invalid_argument("poll->response delay must precede poll->final");
    if (!(pollToFinalUs < pollPeriodMs * 1000.0))
        throw std::invalid_argument("poll period must dominate the in-session delays");
    if (randomJitterBoundUs < 0) throw std::invalid_argument("jitter bound must be non-negative");
    if (jitterEnabled() && randomJitterBoundUs < packetDurationUs)
        throw std::invalid_argument("jitter bound must be at least the packet duration");
}

void ClockModel::validate() const {
    if (std::abs(driftPpm) > 100.0) throw std::invalid_argument("clock drift must stay within 100 ppm");
}

TimePs ClockModel::to_local(TimePs global) const {
    const double g = static_cast<double>(global);
    const double local = g * (1.0 + driftPpm * 1e-6) + static_cast<double>(offsetPs);
    if (local < 0.0) return 0;
    return static_cast<TimePs>(std::llround(local));
}

TimeDeltaPs ClockModel::local_delta_to_global(TimeDeltaPs localDelta) const {
    return static_cast<TimeDeltaPs>(
        std::llround(static_cast<double>(localDelta) / (1.0 + driftPpm * 1e-6)));
}

namespace ranging {

namespace {
double diff_ps(TimePs a, TimePs b) {
    return static_cast<double>(static_cast<std::int64_t>(a) - static_cast<std::int64_t>(b));
}
} // namespace

std::optional<double> distance_ss_twr(TimePs pollTx, TimePs pollRx, TimePs responseTx, TimePs responseRx) {
    const double roundTrip = diff_ps(responseRx, pollTx);
    const double replyDelay = diff_ps(responseTx, pollRx);
    const double tofPs = 0.5 * (roundTrip - replyDelay);
    if (tofPs < 0.0) return std::nullopt;
    return tofPs / kPsPerMeter;
}

std::optional<double> distance_ds_twr(const RangingRecord& r) {
    if (!r.pollTx || !r.pollRx || !r.responseTx || !r.responseRx || !r.finalTx || !r.finalRx)
        throw std::logic_error("DS-TWR needs all six timestamps");
    const double first = diff_ps(*r.responseRx, *r.pollTx) - diff_ps(*r.responseTx, *r.pollRx);
    const double second = diff_ps(*r.finalRx, *r.responseTx) - diff_ps(*r.finalTx, *r.responseRx);
    const double tofPs = 0.25 * (first + second);
    if (tofPs < 0.0) return std::nullopt;
    return tofPs / kPsPerMeter;
}

TimeDeltaPs jitter_draw(const SessionSchedule& schedule, std::uint64_t seed,
                        std::uint64_t pairId, std::uint64_t sessionIndex) {
    if (!schedule.jitterEnabled()) return 0;
    SplitMix64 gen(mix_seed(seed, 0x717E4AULL + pairId, sessionIndex));
    const double t0 = schedule.packetDurationUs;
    const double bound = schedule.randomJitterBoundUs;
    // Uniform over [-bound, +bound] excluding (-t0, +t0): magnitude uniform
    // in [t0, bound], sign uniform.
    const double magnitudeUs = bound > t0 ? t0 + gen.next_unit() * (bound - t0) : t0;
    const double sign = (gen.next() & 1) ? 1.0 : -1.0;
    return static_cast<TimeDeltaPs>(std::llround(sign * magnitudeUs * 1e6));
}

std::optional<TimePs> record_time(const RangingRecord& record) {
    std::optional<TimePs> best;
    for (const auto& stamp : {record.pollTx, record.pollRx, record.responseTx,
                              record.responseRx, record.finalTx, record.finalRx})
        if (stamp && (!best || *stamp > *best)) best = stamp;
    return best;
}

AccessDecision stale_data_policy(const std::vector<RangingRecord>& history,
                                 TimePs nowPs,
                                 double expirySeconds,
                                 double proximityRadiusM) {
    if (!(expirySeconds > 0.0)) throw std::invalid_argument("expiry must be positive");
    const RangingRecord* newest = nullptr;
    TimePs newestTime = 0;
    for (const auto& record : history) {
        if (record.status != SessionStatus::Completed || !record.distanceM) continue;
        const auto t = record_time(record);
        if (!t) continue;
        if (!newest || *t > newestTime) {
            newest = &record;
            newestTime = *t;
        }
    }
    if (!newest) return AccessDecision::Denied;
    const double ageSec = nowPs >= newestTime
                              ? static_cast<double>(nowPs - newestTime) * 1e-12
                              : 0.0;
    if (ageSec > expirySeconds) return AccessDecision::Denied;
    if (*newest->distanceM > proximityRadiusM) return AccessDecision::Denied;
    return AccessDecision::Granted;
}

} // namespace ranging
} // namespace uwbsim

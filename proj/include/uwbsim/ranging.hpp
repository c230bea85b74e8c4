// Two-way ranging records, schedules, clock models, distance computation and
// the stale-data access policy.
#pragma once

#include "uwbsim/units.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace uwbsim {

enum class RangingMode : std::uint8_t { SS, DS };
enum class PacketRole : std::uint8_t { Poll = 0, Response = 1, Final = 2 };

const char* to_string(PacketRole role);

enum class SessionStatus : std::uint8_t { Completed, DroppedPoll, DroppedResponse, DroppedFinal };

const char* to_string(SessionStatus status);
bool is_dropped(SessionStatus status);

struct RangingRecord {
    std::uint64_t sessionIndex = 0;
    // Local-clock timestamps, ps. Final-leg stamps absent for SS-TWR.
    std::optional<TimePs> pollTx, pollRx, responseTx, responseRx, finalTx, finalRx;
    std::optional<double> distanceM; // present iff status == Completed
    SessionStatus status = SessionStatus::DroppedPoll;

    bool validate_ordering() const; // present stamps strictly increasing in protocol order
};

struct SessionSchedule {
    double pollToResponseUs = 800.0;   // responder turnaround, poll arrival -> response emission
    double pollToFinalUs = 1600.0;     // initiator, poll emission -> final emission
    double pollPeriodMs = 167.0;       // poll -> next poll
    double randomJitterBoundUs = 0.0;  // 0 = countermeasure off
    double packetDurationUs = 0.0;     // t0, derived from the packet config

    void validate() const; // t1 < t2 < t3; jitter on requires bound >= t0
    TimePs pollToResponsePs() const { return us_to_ps(pollToResponseUs); }
    TimePs pollToFinalPs() const { return us_to_ps(pollToFinalUs); }
    TimePs pollPeriodPs() const { return ms_to_ps(pollPeriodMs); }
    bool jitterEnabled() const { return randomJitterBoundUs > 0.0; }
};

struct ClockModel {
    double driftPpm = 0.0; // |drift| <= 100
    std::int64_t offsetPs = 0;

    void validate() const;
    // Local reading of a global instant.
    TimePs to_local(TimePs global) const;
    // Global duration that spans `localDelta` ticks on this clock.
    TimeDeltaPs local_delta_to_global(TimeDeltaPs localDelta) const;
};

namespace ranging {

// Eq. 1: d = (c/2) * [(responseRx - pollTx) - (responseTx - pollRx)].
// A negative time-of-flight estimate returns nullopt (invalid record).
std::optional<double> distance_ss_twr(TimePs pollTx, TimePs pollRx, TimePs responseTx, TimePs responseRx);

// Eq. 2: d = (c/4) * [(tRR-tSP) - (tSR-tRP) + (tRF-tSR) - (tSF-tRR)].
// Missing final stamps -> std::logic_error.
std::optional<double> distance_ds_twr(const RangingRecord& record);

// Per-session response jitter (countermeasure): uniform over
// [-bound, +bound] with (-t0, +t0) excluded, in picoseconds.
TimeDeltaPs jitter_draw(const SessionSchedule& schedule, std::uint64_t seed,
                        std::uint64_t pairId, std::uint64_t sessionIndex);

enum class AccessDecision : std::uint8_t { Granted, Denied };

// Timestamp a record carries for ageing purposes: its latest present stamp.
std::optional<TimePs> record_time(const RangingRecord& record);

// PKES stale-data policy: granted iff the newest Completed record is younger
// than `expirySeconds` and its distance is within `proximityRadiusM`.
// Empty or success-free history -> Denied. expirySeconds must be > 0.
AccessDecision stale_data_policy(const std::vector<RangingRecord>& history,
                                 TimePs nowPs,
                                 double expirySeconds,
                                 double proximityRadiusM);

} // namespace ranging
} // namespace uwbsim

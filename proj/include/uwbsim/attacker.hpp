// The reactive jammer agent: staged packet-configuration sniffing driven by
// receiver error codes, inter-packet interval measurement, attack-delay
// computation and jam planning.
#pragma once

#include "uwbsim/packet_config.hpp"
#include "uwbsim/ranging.hpp"
#include "uwbsim/receiver.hpp"
#include "uwbsim/units.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace uwbsim {

// Sniffing stages, in pipeline order. Each stage iterates only its own
// parameters; everything resolved earlier stays frozen.
//   1: (channel, pac)            until outcome != NoDetection
//   2: (codeIndex, preambleLen)  until outcome != SyncError
//   3: sfdType                   until outcome != SfdError
//   4: (stsMode, stsLen, profile) until Ok
enum class SniffStage : std::uint8_t { Stage1 = 1, Stage2 = 2, Stage3 = 3, Stage4 = 4, Done = 5, Failed = 6 };

const char* to_string(SniffStage stage);

struct SnifferState {
    SniffStage stage = SniffStage::Stage1;
    std::size_t cursor = 0;          // position within the current stage's product
    PacketConfig candidate;          // candidate under test (frozen fields + cursor fields)
    std::uint64_t packetsConsumed = 0;
    std::uint64_t sessionsObserved = 0;
    TimePs lastPacketPs = 0;
    // Per-stage packet counts for the sniffing-time accounting.
    std::array<std::uint64_t, 4> stagePackets{0, 0, 0, 0};

    bool done() const { return stage == SniffStage::Done; }
    bool failed() const { return stage == SniffStage::Failed; }
};

struct TimingEstimate {
    double responseDelayUs = 0.0; // t1 estimate (poll -> response)
    double finalDelayUs = 0.0;    // t2 estimate (poll -> final), 0 for SS
    double pollPeriodUs = 0.0;    // t3 estimate (poll -> poll)
    TimePs anchorPs = 0;          // latest poll report time
    double chunkUs = 0.0;         // PAC accumulation time, from the sniffed config
    double packetUs = 0.0;        // attack packet duration, from the sniffed config
    double txLatencyUs = 20.0;    // hardware transmit latency compensation
};

struct JamPlan {
    PacketRole targetPacket = PacketRole::Response;
    int jamCodeIndex = 12;        // must differ from the victim's code
    double syncPowerGain = 8.0;   // jam/victim SYNC power ratio at equal range
    PacketConfig jamConfig;       // victim config with the jam code; sent SYNC|SFD|STS only

    void validate(const PacketConfig& victimConfig) const;
};

namespace attack {

// Exact Cartesian product of all domains, counted by enumeration.
std::uint64_t search_space_size(const ParameterDomains& domains);
// Sum of the per-stage products (worst-case packets for the staged search).
std::uint64_t staged_search_size(const ParameterDomains& domains);

// Initial sniffer state over the given domains.
SnifferState sniffer_init(const ParameterDomains& domains);

// Candidate config the sniffer wants tested on the next packet.
const PacketConfig& sniffer_candidate(const SnifferState& state);

// Advance the state with the receiver outcome of one observed packet. An
// error code from a later field freezes every parameter up to that field
// (the packet proved them correct) and jumps ahead; Ok completes. Exhausting
// a stage without progress -> Failed (victim outside the modeled domains).
SnifferState sniff_step(const SnifferState& state, const RxOutcome& outcome,
                        const ParameterDomains& domains, TimePs packetTimePs = 0);

struct PacketObservation {
    PacketRole role;
    TimePs rxTimePs;
};

// Median inter-packet intervals from >= 2 fully observed sessions.
// Spread above 2*txLatency -> UnstableTiming (nullopt + reason).
struct TimingResult {
    std::optional<TimingEstimate> estimate;
    std::string error; // "UnstableTiming" | "" on success
};
TimingResult measure_intervals(const std::vector<PacketObservation>& observations,
                               const PacketConfig& sniffedConfig,
                               double txLatencyUs = 20.0);

// T_attack = T_measure - T_chunk - T_packet - T_delta. Non-positive result
// -> nullopt (config too tight to attack).
std::optional<double> compute_attack_delay(const TimingEstimate& estimate);

double chunk_duration_us(const PacketConfig& cfg);

} // namespace attack
} // namespace uwbsim

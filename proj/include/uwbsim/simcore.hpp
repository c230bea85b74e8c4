// Deterministic discrete-event engine: global picosecond clock, event queue,
// node registry, waveform timeline and trace capture.
#pragma once

#include "uwbsim/attacker.hpp"
#include "uwbsim/channel.hpp"
#include "uwbsim/packet_config.hpp"
#include "uwbsim/ranging.hpp"
#include "uwbsim/receiver.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace uwbsim {

struct RangingPairSpec {
    std::string name = "pair0";
    NodePosition initiator;
    NodePosition responder;
    PacketConfig config;
    StsKey key;
    ClockModel initiatorClock;
    ClockModel responderClock;
    SessionSchedule schedule;
    RangingMode mode = RangingMode::DS;
    TimePs startOffsetPs = 0;
    int payloadBits = 40;
};

enum class AttackerMode : std::uint8_t {
    Off,
    // Sniff the config, measure timing, then jam (the full pipeline).
    Full,
    // Jam from the start using the provided victim config and nominal timing
    // (used by experiments that assume sniffing already happened).
    KnownConfig,
};

struct AttackerSpec {
    AttackerMode mode = AttackerMode::Off;
    NodePosition position;
    std::size_t targetPair = 0;
    JamPlan plan;
    // Delay the jam SYNC arrival aims at, relative to the target packet's
    // nominal slot; overrides the computed delay when set (delay sweeps).
    std::optional<double> arrivalDelayUs;
    // Victim field the power gain is expressed against (field sweeps aim the
    // jam SYNC at this field via arrivalDelayUs).
    std::string targetField = "SYNC";
    bool perturbTxLatency = false; // draw actual latency from N(20, 2.74) us
    double txLatencyNominalUs = 20.0;
    double txLatencySigmaUs = 2.74;
};

struct Scenario {
    int schemaVersion = 1;
    std::uint64_t seed = 1;
    double durationSec = 30.0;
    ChannelParams channelParams;
    std::vector<RangingPairSpec> pairs;
    AttackerSpec attacker;
    DetectionThresholds thresholds;

    void validate() const; // throws std::invalid_argument with a reason
};

struct TraceEvent {
    TimePs t = 0;
    std::uint64_t id = 0; // total order tiebreak
    std::string node;
    std::string kind; // "emit" | "rx" | "sniff" | "session"
    std::string detail; // JSON object payload (already serialized)
};

struct PairSummary {
    std::string name;
    std::uint64_t pollsSent = 0;          // N_p
    std::uint64_t responsesReceived = 0;  // N_r at the initiator
    std::uint64_t sessionsCompleted = 0;
    double successRate = 0.0;             // 1 - N_r/N_p
    std::vector<double> distances;
};

struct SnifferReport {
    bool ran = false;
    bool done = false;
    bool failed = false;
    std::uint64_t packetsConsumed = 0;
    std::array<std::uint64_t, 4> stagePackets{0, 0, 0, 0};
    PacketConfig sniffedConfig;
    std::optional<double> attackDelayUs;
};

struct Trace {
    std::vector<TraceEvent> events;
    std::vector<PairSummary> pairSummaries;
    std::map<std::string, std::vector<RangingRecord>> records; // per pair name
    SnifferReport sniffer;

    // Recompute the pair summaries from the event log; must match stored.
    std::vector<PairSummary> recompute_summaries() const;
    std::string summary_json() const;
    void write_events_jsonl(const std::string& path) const;
    void write_summary_json(const std::string& path) const;
};

namespace sim {

Trace run(const Scenario& scenario);

} // namespace sim
} // namespace uwbsim

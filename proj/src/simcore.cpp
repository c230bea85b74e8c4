#include "uwbsim/simcore.hpp"

#include "uwbsim/phy.hpp"
#include "uwbsim/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <stdexcept>

using nlohmann::json;

namespace uwbsim {

void Scenario::validate() const {
    if (schemaVersion != 1) throw std::invalid_argument("unsupported schemaVersion");
    if (!(durationSec > 0.0)) throw std::invalid_argument("duration must be positive");
    if (pairs.empty()) throw std::invalid_argument("at least one ranging pair required");
    channelParams.validate();
    thresholds.validate();
    std::vector<NodePosition> positions;
    for (const auto& pair : pairs) {
        validate_config(pair.config);
        pair.initiatorClock.validate();
        pair.responderClock.validate();
        SessionSchedule sched = pair.schedule;
        sched.packetDurationUs = phy::packet_duration_us(pair.config, pair.payloadBits, false);
        sched.validate();
        if (pair.payloadBits < 0 || pair.payloadBits > phy::kMaxPayloadBits)
            throw std::invalid_argument("payload bits out of range");
        positions.push_back(pair.initiator);
        positions.push_back(pair.responder);
    }
    if (attacker.mode != AttackerMode::Off) {
        if (attacker.targetPair >= pairs.size())
            throw std::invalid_argument("attacker target pair out of range");
        attacker.plan.validate(pairs[attacker.targetPair].config);
        validate_config(attacker.plan.jamConfig);
        positions.push_back(attacker.position);
    }
    for (std::size_t i = 0; i < positions.size(); ++i)
        for (std::size_t j = i + 1; j < positions.size(); ++j)
            if (distance_m(positions[i], positions[j]) <= 0.0)
                throw std::invalid_argument("node positions must be pairwise distinct");
}

namespace sim {

namespace {

constexpr std::int64_t kGuardPreChips = 32;
constexpr std::int64_t kGuardPostChips = 64;

enum class NodeRole : std::uint8_t { Initiator, Responder, Attacker };

struct Node {
    int id = 0;
    std::string name;
    NodeRole role = NodeRole::Initiator;
    std::size_t pairIdx = 0;
    NodePosition pos;
    PacketConfig config; // for the attacker: current candidate / sniffed config
    ClockModel clock;
    std::vector<std::pair<TimePs, TimePs>> txIntervals; // half-duplex bookkeeping
};

struct Transmission {
    std::uint64_t id = 0;
    int txNode = 0;
    std::size_t pairIdx = 0;
    std::uint64_t session = 0;
    PacketRole role = PacketRole::Poll;
    bool isJam = false;
    BasebandSignal wave; // startTimePs = emission time, at the transmitter
    TimePs endPs = 0;
};

enum class EventKind : std::uint8_t {
    EmitPoll = 0,
    EmitResponse = 1,
    EmitFinal = 2,
    EmitJam = 3,
    Deliver = 4,
    Finalize = 5,
};

struct Event {
    TimePs t = 0;
    int nodeId = 0;
    EventKind kind = EventKind::EmitPoll;
    std::uint64_t seq = 0;
    std::size_t pairIdx = 0;
    std::uint64_t session = 0;
    std::uint64_t txId = 0;
};

struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
        // Reversed for std::priority_queue (min first). Simultaneous events
        // order by (nodeId, eventKind), then scheduling sequence.
        if (a.t != b.t) return a.t > b.t;
        if (a.nodeId != b.nodeId) return a.nodeId > b.nodeId;
        if (a.kind != b.kind) return a.kind > b.kind;
        return a.seq > b.seq;
    }
};

struct SessionBook {
    std::optional<TimePs> pollTx, pollRx, responseTx, responseRx, finalTx, finalRx;
    bool pollOk = false, responseOk = false, finalOk = false;
    bool finalized = false;
};

struct AttackerPhase {
    enum class P : std::uint8_t { Sniffing, Timing, Attacking, Stopped } p = P::Sniffing;
};

struct Engine {
    const Scenario& sc;
    Trace trace;
    std::priority_queue<Event, std::vector<Event>, EventOrder> queue;
    std::uint64_t seqCounter = 0;
    std::uint64_t txCounter = 0;
    std::uint64_t eventIdCounter = 0;
    std::vector<Node> nodes;
    std::vector<Transmission> inflight;
    std::vector<std::map<std::uint64_t, SessionBook>> books; // per pair
    std::vector<std::uint64_t> pollsSent;

    // Attacker state
    AttackerPhase phase;
    SnifferState sniffer;
    PacketConfig sniffedConfig;
    bool haveSniffedConfig = false;
    std::vector<attack::PacketObservation> observations;
    TimePs lastObservationPs = 0;
    PacketRole lastObservedRole = PacketRole::Final;
    std::optional<TimingEstimate> timing;
    std::uint64_t jamCounter = 0;
    int attackerNodeId = -1;
    StsKey attackerKey;

    TimePs durationPs = 0;

    explicit Engine(const Scenario& scenario) : sc(scenario) {}

    void push(Event e) {
        e.seq = seqCounter++;
        queue.push(e);
    }

    void log(TimePs t, const std::string& node, const std::string& kind, json detail) {
        TraceEvent ev;
        ev.t = t;
        ev.id = eventIdCounter++;
        ev.node = node;
        ev.kind = kind;
        ev.detail = detail.dump();
        trace.events.push_back(std::move(ev));
    }

    Node& node(int id) { return nodes[static_cast<std::size_t>(id)]; }

    int initiatorId(std::size_t pair) const { return static_cast<int>(pair * 2); }
    int responderId(std::size_t pair) const { return static_cast<int>(pair * 2 + 1); }

    static std::uint64_t sts_counter(std::uint64_t session, PacketRole role) {
        return session * 4 + static_cast<std::uint64_t>(role);
    }

    void setup() {
        durationPs = static_cast<TimePs>(std::llround(sc.durationSec * 1e12));
        books.resize(sc.pairs.size());
        pollsSent.assign(sc.pairs.size(), 0);
        int id = 0;
        for (std::size_t p = 0; p < sc.pairs.size(); ++p) {
            const auto& spec = sc.pairs[p];
            nodes.push_back(Node{id++, spec.name + ".init", NodeRole::Initiator, p,
                                 spec.initiator, spec.config, spec.initiatorClock, {}});
            nodes.push_back(Node{id++, spec.name + ".resp", NodeRole::Responder, p,
                                 spec.responder, spec.config, spec.responderClock, {}});
        }
        if (sc.attacker.mode != AttackerMode::Off) {
            attackerNodeId = id;
            nodes.push_back(Node{id++, "attacker", NodeRole::Attacker, sc.attacker.targetPair,
                                 sc.attacker.position, sc.attacker.plan.jamConfig, ClockModel{}, {}});
            attackerKey = StsKey{mix_seed(sc.seed, 0xA77ACCE5ULL), mix_seed(sc.seed, 0x5EC4E7ULL)};
            switch (sc.attacker.mode) {
                case AttackerMode::Full:
                    phase.p = AttackerPhase::P::Sniffing;
                    sniffer = attack::sniffer_init(default_domains());
                    trace.sniffer.ran = true;
                    break;
                case AttackerMode::KnownConfig: {
                    phase.p = AttackerPhase::P::Attacking;
                    sniffedConfig = sc.pairs[sc.attacker.targetPair].config;
                    haveSniffedConfig = true;
                    nodes.back().config = sniffedConfig;
                    TimingEstimate est;
                    const auto& sched = sc.pairs[sc.attacker.targetPair].schedule;
                    est.responseDelayUs = sched.pollToResponseUs;
                    est.finalDelayUs = sched.pollToFinalUs;
                    est.pollPeriodUs = sched.pollPeriodMs * 1000.0;
                    est.chunkUs = attack::chunk_duration_us(sniffedConfig);
                    est.packetUs = phy::packet_duration_us(sc.attacker.plan.jamConfig, 0, true);
                    est.txLatencyUs = sc.attacker.txLatencyNominalUs;
                    timing = est;
                    break;
                }
                default: break;
            }
        }
        // Pre-schedule every poll (fixed cadence on the initiator clock) and a
        // finalize point late in each session slot.
        for (std::size_t p = 0; p < sc.pairs.size(); ++p) {
            const auto& spec = sc.pairs[p];
            const TimeDeltaPs periodLocal = static_cast<TimeDeltaPs>(spec.schedule.pollPeriodPs());
            for (std::uint64_t n = 0;; ++n) {
                const TimeDeltaPs sinceStart = spec.initiatorClock.local_delta_to_global(
                    static_cast<TimeDeltaPs>(n) * periodLocal);
                const TimePs t = spec.startOffsetPs + static_cast<TimePs>(sinceStart);
                if (t >= durationPs) break;
                push(Event{t, initiatorId(p), EventKind::EmitPoll, 0, p, n, 0});
                const TimePs fin = t + static_cast<TimePs>(
                                           static_cast<double>(spec.schedule.pollPeriodPs()) * 0.95);
                push(Event{fin, initiatorId(p), EventKind::Finalize, 0, p, n, 0});
            }
        }
    }

    // ---- transmissions -------------------------------------------------------

    void register_transmission(int txNodeId, std::size_t pairIdx, std::uint64_t session,
                               PacketRole role, bool isJam, BasebandSignal wave) {
        Transmission tx;
        tx.id = txCounter++;
        tx.txNode = txNodeId;
        tx.pairIdx = pairIdx;
        tx.session = session;
        tx.role = role;
        tx.isJam = isJam;
        tx.endPs = wave.startTimePs + chips_to_ps(wave.lengthChips());
        tx.wave = std::move(wave);

        Node& sender = node(txNodeId);
        sender.txIntervals.emplace_back(tx.wave.startTimePs, tx.endPs);
        if (sender.txIntervals.size() > 16)
            sender.txIntervals.erase(sender.txIntervals.begin());

        json detail{{"role", tx.isJam ? "jam" : to_string(tx.role)},
                    {"pair", sc.pairs[pairIdx].name},
                    {"session", session},
                    {"chips", tx.wave.lengthChips()}};
        log(tx.wave.startTimePs, sender.name, "emit", detail);

        // Fan out deliveries.
        for (const auto& rx : nodes) {
            if (rx.id == txNodeId) continue;
            const TimePs arrival =
                tx.wave.startTimePs + meters_to_tof_ps(distance_m(sender.pos, rx.pos));
            push(Event{arrival, rx.id, EventKind::Deliver, 0, pairIdx, session, tx.id});
        }
        inflight.push_back(std::move(tx));
    }

    void prune_inflight(TimePs now) {
        const TimePs horizon = now > ms_to_ps(10.0) ? now - ms_to_ps(10.0) : 0;
        std::erase_if(inflight, [&](const Transmission& t) { return t.endPs < horizon; });
    }

    const Transmission* find_tx(std::uint64_t id) const {
        for (const auto& t : inflight)
            if (t.id == id) return &t;
        return nullptr;
    }

    // ---- window assembly -------------------------------------------------------

    BasebandSignal build_window(const Transmission& base, const Node& rx) {
        const Node& sender = node(base.txNode);
        BasebandSignal basePropagated =
            channel::propagate(base.wave, sender.pos, rx.pos, sc.channelParams);
        const TimePs arrival = basePropagated.startTimePs;
        const std::int64_t windowChips = basePropagated.lengthChips() + kGuardPreChips + kGuardPostChips;
        const TimePs guardPs = chips_to_ps(kGuardPreChips);
        const TimePs windowStart = arrival >= guardPs ? arrival - guardPs : 0;

        std::vector<BasebandSignal> components;
        components.push_back(std::move(basePropagated));
        for (const auto& other : inflight) {
            if (other.id == base.id) continue;
            const Node& otherSender = node(other.txNode);
            if (otherSender.id == rx.id) continue;
            BasebandSignal prop = channel::propagate(other.wave, otherSender.pos, rx.pos, sc.channelParams);
            const TimePs otherEnd = prop.startTimePs + chips_to_ps(prop.lengthChips());
            const TimePs windowEnd = windowStart + chips_to_ps(windowChips);
            if (otherEnd <= windowStart || prop.startTimePs >= windowEnd) continue;
            // Front-end isolation for off-channel interferers.
            const double iso = rx::cross_channel_isolation(prop.channel, rx.config.channel);
            if (iso < 1.0)
                for (double& s : prop.samples) s *= iso;
            components.push_back(std::move(prop));
        }
        return channel::superpose(components, windowStart, windowChips, sc.channelParams, 0);
    }

    bool half_duplex_busy(const Node& rx, TimePs from, TimePs to) const {
        for (const auto& [s, e] : rx.txIntervals)
            if (s < to && e > from) return true;
        return false;
    }

    // ---- protocol handlers -----------------------------------------------------

    void emit_poll(const Event& ev) {
        const auto& spec = sc.pairs[ev.pairIdx];
        pollsSent[ev.pairIdx] += 1;
        auto& book = books[ev.pairIdx][ev.session];
        book.pollTx = node(initiatorId(ev.pairIdx)).clock.to_local(ev.t);

        StsContext sts{spec.key, sts_counter(ev.session, PacketRole::Poll)};
        auto wave = phy::assemble_packet(spec.config, sts, payload_bits(spec, ev.session, PacketRole::Poll),
                                         PowerProfile{}, false);
        wave.startTimePs = ev.t;
        register_transmission(initiatorId(ev.pairIdx), ev.pairIdx, ev.session, PacketRole::Poll, false,
                              std::move(wave));
    }

    std::vector<int> payload_bits(const RangingPairSpec& spec, std::uint64_t session, PacketRole role) const {
        std::vector<int> bits(static_cast<std::size_t>(spec.payloadBits));
        SplitMix64 gen(mix_seed(sc.seed, 0xB175ULL + static_cast<std::uint64_t>(role), session));
        for (auto& b : bits) b = static_cast<int>(gen.next() & 1);
        return bits;
    }

    void emit_response(const Event& ev) {
        const auto& spec = sc.pairs[ev.pairIdx];
        auto& book = books[ev.pairIdx][ev.session];
        book.responseTx = node(responderId(ev.pairIdx)).clock.to_local(ev.t);
        StsContext sts{spec.key, sts_counter(ev.session, PacketRole::Response)};
        auto wave = phy::assemble_packet(spec.config, sts,
                                         payload_bits(spec, ev.session, PacketRole::Response),
                                         PowerProfile{}, false);
        wave.startTimePs = ev.t;
        register_transmission(responderId(ev.pairIdx), ev.pairIdx, ev.session, PacketRole::Response,
                              false, std::move(wave));
    }

    void emit_final(const Event& ev) {
        const auto& spec = sc.pairs[ev.pairIdx];
        auto& book = books[ev.pairIdx][ev.session];
        book.finalTx = node(initiatorId(ev.pairIdx)).clock.to_local(ev.t);
        StsContext sts{spec.key, sts_counter(ev.session, PacketRole::Final)};
        auto wave = phy::assemble_packet(spec.config, sts,
                                         payload_bits(spec, ev.session, PacketRole::Final),
                                         PowerProfile{}, false);
        wave.startTimePs = ev.t;
        register_transmission(initiatorId(ev.pairIdx), ev.pairIdx, ev.session, PacketRole::Final,
                              false, std::move(wave));
    }

    void emit_jam(const Event& ev) {
        const auto& plan = sc.attacker.plan;
        const auto& victim = sc.pairs[sc.attacker.targetPair];
        StsContext sts{attackerKey, 0xA770000ULL + jamCounter++};
        double amplitude = std::sqrt(plan.syncPowerGain);
        // The power gain is a field power ratio; per-chip densities differ
        // between the jam SYNC and the targeted field.
        amplitude *= std::sqrt(target_field_power(victim.config) /
                               phy::nominal_field_power(plan.jamConfig, "SYNC"));
        auto wave = phy::assemble_packet(plan.jamConfig, sts, {}, PowerProfile::jam_sync(amplitude),
                                         /*omitPhdPayload=*/true);
        wave.startTimePs = ev.t;
        register_transmission(attackerNodeId, sc.attacker.targetPair, ev.session, PacketRole::Response,
                              true, std::move(wave));
    }

    double target_field_power(const PacketConfig& victimCfg) const {
        return phy::nominal_field_power(victimCfg, sc.attacker.targetField);
    }

    void finalize_session(const Event& ev) {
        auto& book = books[ev.pairIdx][ev.session];
        if (book.finalized) return;
        book.finalized = true;
        const auto& spec = sc.pairs[ev.pairIdx];

        RangingRecord rec;
        rec.sessionIndex = ev.session;
        rec.pollTx = book.pollTx;
        rec.pollRx = book.pollRx;
        rec.responseTx = book.responseTx;
        rec.responseRx = book.responseRx;
        rec.finalTx = book.finalTx;
        rec.finalRx = book.finalRx;

        if (!book.pollOk) {
            rec.status = SessionStatus::DroppedPoll;
        } else if (!book.responseOk) {
            rec.status = SessionStatus::DroppedResponse;
        } else if (spec.mode == RangingMode::DS && !book.finalOk) {
            rec.status = SessionStatus::DroppedFinal;
        } else {
            rec.status = SessionStatus::Completed;
            if (spec.mode == RangingMode::SS) {
                rec.distanceM = ranging::distance_ss_twr(*rec.pollTx, *rec.pollRx, *rec.responseTx,
                                                         *rec.responseRx);
            } else {
                rec.distanceM = ranging::distance_ds_twr(rec);
            }
        }
        trace.records[spec.name].push_back(rec);
        json detail{{"pair", spec.name},
                    {"session", ev.session},
                    {"status", to_string(rec.status)}};
        if (rec.distanceM) detail["distance_m"] = *rec.distanceM;
        log(ev.t, spec.name, "session", detail);
    }

    // ---- delivery --------------------------------------------------------------

    void deliver(const Event& ev) {
        prune_inflight(ev.t);
        const Transmission* tx = find_tx(ev.txId);
        if (!tx) return;
        Node& rx = node(ev.nodeId);
        const TimePs arrivalEnd = ev.t + chips_to_ps(tx->wave.lengthChips());
        if (half_duplex_busy(rx, ev.t, arrivalEnd)) return;

        if (rx.role == NodeRole::Attacker) {
            deliver_to_attacker(ev, *tx, rx);
            return;
        }

        const auto& spec = sc.pairs[rx.pairIdx];
        const BasebandSignal window = build_window(*tx, rx);
        // The victim's protocol expectation at this instant fixes the local
        // STS counter: sessions run at a fixed cadence on the shared schedule.
        const std::uint64_t sessionNow = session_at(rx.pairIdx, ev.t);
        PacketRole expected;
        if (rx.role == NodeRole::Initiator) {
            expected = PacketRole::Response;
        } else {
            auto& book = books[rx.pairIdx][sessionNow];
            expected = (book.pollOk && book.responseTx && spec.mode == RangingMode::DS &&
                        !book.finalOk)
                           ? PacketRole::Final
                           : PacketRole::Poll;
        }
        StsContext sts{spec.key, sts_counter(sessionNow, expected)};
        const RxOutcome outcome = rx::receive_packet(window, rx.config, sts, sc.thresholds);

        json detail{{"outcome", outcome.tag()},
                    {"ok", outcome.ok},
                    {"src_role", tx->isJam ? "jam" : to_string(tx->role)},
                    {"src_pair", sc.pairs[tx->pairIdx].name},
                    {"src_session", tx->session}};
        if (outcome.ok) {
            detail["rx_timestamp_ps"] = outcome.rxTimestampPs;
            detail["sync_peak"] = outcome.syncCir.peakValue;
            if (outcome.stsCir) detail["sts_peak"] = outcome.stsCir->peakValue;
        }
        log(ev.t, rx.name, "rx", detail);
        if (!outcome.ok) return;
        // Only the packet the node is actually awaiting advances the protocol.
        if (tx->isJam || tx->pairIdx != rx.pairIdx || tx->role != expected ||
            tx->session != sessionNow)
            return;

        auto& book = books[rx.pairIdx][sessionNow];
        const TimePs localStamp = rx.clock.to_local(outcome.rxTimestampPs);
        if (rx.role == NodeRole::Responder && expected == PacketRole::Poll && !book.pollOk) {
            book.pollOk = true;
            book.pollRx = localStamp;
            // Turnaround measured poll-arrival -> response-emission on the
            // responder clock, plus the countermeasure jitter when enabled.
            TimeDeltaPs turnaroundLocal =
                static_cast<TimeDeltaPs>(spec.schedule.pollToResponsePs()) +
                ranging::jitter_draw(spec.schedule, sc.seed, rx.pairIdx, sessionNow);
            const TimePs emitAt = outcome.rxTimestampPs +
                                  static_cast<TimePs>(rx.clock.local_delta_to_global(turnaroundLocal));
            push(Event{emitAt, rx.id, EventKind::EmitResponse, 0, rx.pairIdx, sessionNow, 0});
        } else if (rx.role == NodeRole::Initiator && expected == PacketRole::Response &&
                   !book.responseOk) {
            book.responseOk = true;
            book.responseRx = localStamp;
            if (spec.mode == RangingMode::DS && book.pollTx) {
                // Final goes out at t2 after the poll on the initiator clock.
                const TimeDeltaPs t2Local = static_cast<TimeDeltaPs>(spec.schedule.pollToFinalPs());
                const TimePs pollGlobal = poll_global_time(rx.pairIdx, sessionNow);
                const TimePs emitAt =
                    pollGlobal + static_cast<TimePs>(rx.clock.local_delta_to_global(t2Local));
                push(Event{emitAt, rx.id, EventKind::EmitFinal, 0, rx.pairIdx, sessionNow, 0});
            }
        } else if (rx.role == NodeRole::Responder && expected == PacketRole::Final && !book.finalOk) {
            book.finalOk = true;
            book.finalRx = localStamp;
        }
    }

    std::uint64_t session_at(std::size_t pairIdx, TimePs t) const {
        const auto& spec = sc.pairs[pairIdx];
        if (t <= spec.startOffsetPs) return 0;
        const double period = static_cast<double>(spec.schedule.pollPeriodPs());
        return static_cast<std::uint64_t>(
            std::floor(static_cast<double>(t - spec.startOffsetPs) / period + 0.5));
    }

    TimePs poll_global_time(std::size_t pairIdx, std::uint64_t session) const {
        const auto& spec = sc.pairs[pairIdx];
        const TimeDeltaPs periodLocal = static_cast<TimeDeltaPs>(spec.schedule.pollPeriodPs());
        const TimeDeltaPs sinceStart = sc.pairs[pairIdx].initiatorClock.local_delta_to_global(
            static_cast<TimeDeltaPs>(session) * periodLocal);
        return spec.startOffsetPs + static_cast<TimePs>(sinceStart);
    }

    // ---- attacker --------------------------------------------------------------

    void deliver_to_attacker(const Event& ev, const Transmission& tx, Node& rx) {
        if (phase.p == AttackerPhase::P::Stopped) return;
        if (tx.txNode == attackerNodeId) return;
        if (phase.p == AttackerPhase::P::Sniffing)
            rx.config = attack::sniffer_candidate(sniffer);
        const BasebandSignal window = build_window(tx, rx);

        if (phase.p == AttackerPhase::P::Sniffing) {
            const PacketConfig& candidate = attack::sniffer_candidate(sniffer);
            const RxOutcome outcome = rx::receive_packet(window, candidate, std::nullopt, sc.thresholds);
            json detail{{"stage", to_string(sniffer.stage)},
                        {"cursor", sniffer.cursor},
                        {"candidate", describe(candidate)},
                        {"outcome", outcome.tag()}};
            sniffer = attack::sniff_step(sniffer, outcome, default_domains(), ev.t);
            detail["packets"] = sniffer.packetsConsumed;
            log(ev.t, rx.name, "sniff", detail);
            if (sniffer.done()) {
                sniffedConfig = sniffer.candidate;
                haveSniffedConfig = true;
                rx.config = sniffedConfig;
                phase.p = AttackerPhase::P::Timing;
                trace.sniffer.done = true;
                trace.sniffer.sniffedConfig = sniffedConfig;
            } else if (sniffer.failed()) {
                phase.p = AttackerPhase::P::Stopped;
                trace.sniffer.failed = true;
            }
            trace.sniffer.packetsConsumed = sniffer.packetsConsumed;
            trace.sniffer.stagePackets = sniffer.stagePackets;
            return;
        }

        // Timing and attacking phases listen with the resolved config.
        const RxOutcome outcome = rx::receive_packet(window, sniffedConfig, std::nullopt, sc.thresholds);
        if (!outcome.ok) return;
        // The chip reports a packet only after accumulating one PAC chunk.
        const TimePs report = outcome.rxTimestampPs + us_to_ps(attack::chunk_duration_us(sniffedConfig));
        PacketRole role;
        // Packets separated by more than the in-session span open a session.
        if (lastObservationPs == 0 || report > lastObservationPs + ms_to_ps(3.0))
            role = PacketRole::Poll;
        else if (lastObservedRole == PacketRole::Poll)
            role = PacketRole::Response;
        else
            role = PacketRole::Final;
        lastObservationPs = report;
        lastObservedRole = role;

        if (phase.p == AttackerPhase::P::Timing) {
            observations.push_back(attack::PacketObservation{role, report});
            std::uint64_t polls = 0;
            for (const auto& o : observations)
                if (o.role == PacketRole::Poll) ++polls;
            if (polls >= 4 && role == PacketRole::Poll) {
                auto result = attack::measure_intervals(observations, sniffedConfig,
                                                        sc.attacker.txLatencyNominalUs);
                if (result.estimate) {
                    timing = result.estimate;
                    if (auto delay = attack::compute_attack_delay(*timing)) {
                        trace.sniffer.attackDelayUs = delay;
                        phase.p = AttackerPhase::P::Attacking;
                    } else {
                        phase.p = AttackerPhase::P::Stopped;
                    }
                }
                // UnstableTiming keeps the attacker in the timing phase.
            }
            return;
        }

        if (phase.p == AttackerPhase::P::Attacking && role == PacketRole::Poll && timing) {
            schedule_jam(report, session_at(sc.attacker.targetPair, ev.t));
        }
    }

    void schedule_jam(TimePs pollReport, std::uint64_t session) {
        const auto& atk = sc.attacker;
        double arrivalDelayUs;
        if (atk.arrivalDelayUs) {
            arrivalDelayUs = *atk.arrivalDelayUs;
        } else {
            switch (atk.plan.targetPacket) {
                case PacketRole::Final: arrivalDelayUs = timing->finalDelayUs; break;
                case PacketRole::Poll: arrivalDelayUs = timing->pollPeriodUs; break;
                default: arrivalDelayUs = timing->responseDelayUs; break;
            }
        }
        const double cmdDelayUs =
            arrivalDelayUs - timing->chunkUs - timing->packetUs - timing->txLatencyUs;
        if (!(cmdDelayUs > 0.0)) return; // ConfigTooTight: cannot act in time
        double actualLatencyUs = atk.txLatencyNominalUs;
        if (atk.perturbTxLatency) {
            SplitMix64 gen(mix_seed(sc.seed, 0x7DE17AULL, jamCounter));
            actualLatencyUs += atk.txLatencySigmaUs * gen.next_gaussian();
        }
        const TimePs emitAt = pollReport +
                              us_to_ps(cmdDelayUs + timing->packetUs + actualLatencyUs);
        push(Event{emitAt, attackerNodeId, EventKind::EmitJam, 0, atk.targetPair, session, 0});
    }

    // ---- main loop -------------------------------------------------------------

    Trace run() {
        setup();
        while (!queue.empty()) {
            const Event ev = queue.top();
            queue.pop();
            switch (ev.kind) {
                case EventKind::EmitPoll: emit_poll(ev); break;
                case EventKind::EmitResponse: emit_response(ev); break;
                case EventKind::EmitFinal: emit_final(ev); break;
                case EventKind::EmitJam: emit_jam(ev); break;
                case EventKind::Deliver: deliver(ev); break;
                case EventKind::Finalize: finalize_session(ev); break;
            }
        }
        // Summaries.
        for (std::size_t p = 0; p < sc.pairs.size(); ++p) {
            PairSummary s;
            s.name = sc.pairs[p].name;
            s.pollsSent = pollsSent[p];
            for (const auto& [session, book] : books[p]) {
                if (book.responseOk) s.responsesReceived += 1;
            }
            for (const auto& rec : trace.records[s.name]) {
                if (rec.status == SessionStatus::Completed) {
                    s.sessionsCompleted += 1;
                    if (rec.distanceM) s.distances.push_back(*rec.distanceM);
                }
            }
            s.successRate = s.pollsSent == 0
                                ? 0.0
                                : 1.0 - static_cast<double>(s.responsesReceived) /
                                            static_cast<double>(s.pollsSent);
            trace.pairSummaries.push_back(std::move(s));
        }
        return std::move(trace);
    }
};

} // namespace

Trace run(const Scenario& scenario) {
    scenario.validate();
    Engine engine(scenario);
    return engine.run();
}

} // namespace sim

// ---- Trace serialization -------------------------------------------------------

std::vector<PairSummary> Trace::recompute_summaries() const {
    std::map<std::string, PairSummary> byPair;
    for (const auto& s : pairSummaries) {
        PairSummary fresh;
        fresh.name = s.name;
        byPair[s.name] = fresh;
    }
    for (const auto& ev : events) {
        const json detail = json::parse(ev.detail);
        if (ev.kind == "emit" && detail.value("role", "") == "poll") {
            auto it = byPair.find(detail.value("pair", ""));
            if (it != byPair.end()) it->second.pollsSent += 1;
        } else if (ev.kind == "rx" && detail.value("ok", false) &&
                   detail.value("src_role", "") == "response") {
            const std::string pair = detail.value("src_pair", "");
            auto it = byPair.find(pair);
            if (it != byPair.end() && ev.node == pair + ".init") it->second.responsesReceived += 1;
        } else if (ev.kind == "session") {
            auto it = byPair.find(detail.value("pair", ""));
            if (it != byPair.end() && detail.value("status", "") == "Completed") {
                it->second.sessionsCompleted += 1;
                if (detail.contains("distance_m"))
                    it->second.distances.push_back(detail["distance_m"].get<double>());
            }
        }
    }
    std::vector<PairSummary> out;
    for (const auto& s : pairSummaries) {
        PairSummary fresh = byPair[s.name];
        fresh.successRate = fresh.pollsSent == 0
                                ? 0.0
                                : 1.0 - static_cast<double>(fresh.responsesReceived) /
                                            static_cast<double>(fresh.pollsSent);
        out.push_back(std::move(fresh));
    }
    return out;
}

std::string Trace::summary_json() const {
    json j;
    j["schemaVersion"] = 1;
    json pairs = json::array();
    for (const auto& s : pairSummaries) {
        json p{{"name", s.name},
               {"polls_sent", s.pollsSent},
               {"responses_received", s.responsesReceived},
               {"sessions_completed", s.sessionsCompleted},
               {"success_rate", s.successRate},
               {"distances_m", s.distances}};
        pairs.push_back(p);
    }
    j["pairs"] = pairs;
    if (sniffer.ran) {
        json sn{{"done", sniffer.done},
                {"failed", sniffer.failed},
                {"packets", sniffer.packetsConsumed},
                {"stage_packets", sniffer.stagePackets},
                {"config", describe(sniffer.sniffedConfig)}};
        if (sniffer.attackDelayUs) sn["attack_delay_us"] = *sniffer.attackDelayUs;
        j["sniffer"] = sn;
    }
    return j.dump(2) + "\n";
}

void Trace::write_events_jsonl(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& ev : events) {
        json j = json::parse(ev.detail);
        j["t"] = ev.t;
        j["id"] = ev.id;
        j["node"] = ev.node;
        j["ev"] = ev.kind;
        out << j.dump() << "\n";
    }
}

void Trace::write_summary_json(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << summary_json();
}

} // namespace uwbsim

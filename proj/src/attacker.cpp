#include "uwbsim/attacker.hpp"

#include "uwbsim/phy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uwbsim {

const char* to_string(SniffStage stage) {
    switch (stage) {
        case SniffStage::Stage1: return "stage1";
        case SniffStage::Stage2: return "stage2";
        case SniffStage::Stage3: return "stage3";
        case SniffStage::Stage4: return "stage4";
        case SniffStage::Done: return "done";
        case SniffStage::Failed: return "failed";
    }
    return "?";
}

void JamPlan::validate(const PacketConfig& victimConfig) const {
    if (jamCodeIndex == victimConfig.preambleCodeIndex)
        throw std::invalid_argument("jam code must differ from the victim's preamble code");
    if (!(syncPowerGain > 0.0)) throw std::invalid_argument("jam power gain must be positive");
    if (jamConfig.preambleCodeIndex != jamCodeIndex)
        throw std::invalid_argument("jam config must carry the jam code");
}

namespace attack {

std::uint64_t search_space_size(const ParameterDomains& d) {
    // Counted by enumeration, not multiplication.
    std::uint64_t count = 0;
    for (std::size_t a = 0; a < d.channels.size(); ++a)
        for (std::size_t b = 0; b < d.pacs.size(); ++b)
            for (std::size_t c = 0; c < d.codeIndices.size(); ++c)
                for (std::size_t e = 0; e < d.preambleLengths.size(); ++e)
                    for (std::size_t f = 0; f < d.sfdTypes.size(); ++f)
                        for (std::size_t g = 0; g < d.stsModes.size(); ++g)
                            for (std::size_t h = 0; h < d.stsLengths.size(); ++h)
                                count += d.phdProfiles.size();
    return count;
}

std::uint64_t staged_search_size(const ParameterDomains& d) {
    const std::uint64_t stage1 = d.channels.size() * d.pacs.size();
    const std::uint64_t stage2 = d.codeIndices.size() * d.preambleLengths.size();
    const std::uint64_t stage3 = d.sfdTypes.size();
    const std::uint64_t stage4 = d.stsModes.size() * d.stsLengths.size() * d.phdProfiles.size();
    return stage1 + stage2 + stage3 + stage4;
}

namespace {

std::uint64_t stage_size(const ParameterDomains& d, SniffStage stage) {
    switch (stage) {
        case SniffStage::Stage1: return d.channels.size() * d.pacs.size();
        case SniffStage::Stage2: return d.codeIndices.size() * d.preambleLengths.size();
        case SniffStage::Stage3: return d.sfdTypes.size();
        case SniffStage::Stage4:
            return d.stsModes.size() * d.stsLengths.size() * d.phdProfiles.size();
        default: return 0;
    }
}

// Write the stage's cursor-selected parameters into the candidate.
void apply_cursor(PacketConfig& cfg, const ParameterDomains& d, SniffStage stage, std::size_t cursor) {
    switch (stage) {
        case SniffStage::Stage1: {
            cfg.channel = d.channels[cursor / d.pacs.size()];
            cfg.pacSymbols = d.pacs[cursor % d.pacs.size()];
            break;
        }
        case SniffStage::Stage2: {
            cfg.preambleCodeIndex = d.codeIndices[cursor / d.preambleLengths.size()];
            cfg.preambleLengthSymbols = d.preambleLengths[cursor % d.preambleLengths.size()];
            break;
        }
        case SniffStage::Stage3: {
            cfg.sfdType = d.sfdTypes[cursor];
            break;
        }
        case SniffStage::Stage4: {
            // Modes whose sub-parameters collapse (no data field, or no STS
            // field) go first so the final block is a full product walk.
            static constexpr StsMode kModeOrder[4] = {StsMode::Off, StsMode::NoData,
                                                      StsMode::BeforeData, StsMode::AfterData};
            const std::size_t perMode = d.stsLengths.size() * d.phdProfiles.size();
            const std::size_t modeIdx = cursor / perMode;
            cfg.stsMode = d.stsModes.size() == 4 ? kModeOrder[modeIdx] : d.stsModes[modeIdx];
            cfg.stsLengthSymbols = d.stsLengths[(cursor / d.phdProfiles.size()) % d.stsLengths.size()];
            cfg.phdProfileId = d.phdProfiles[cursor % d.phdProfiles.size()];
            break;
        }
        default: break;
    }
}

// Defaults for stages not yet reached: first option of each domain.
PacketConfig stage_defaults(const ParameterDomains& d) {
    PacketConfig cfg;
    cfg.channel = d.channels.front();
    cfg.pacSymbols = d.pacs.front();
    cfg.preambleCodeIndex = d.codeIndices.front();
    cfg.preambleLengthSymbols = d.preambleLengths.front();
    cfg.sfdType = d.sfdTypes.front();
    cfg.stsMode = d.stsModes.front();
    cfg.stsLengthSymbols = d.stsLengths.front();
    cfg.phdProfileId = d.phdProfiles.front();
    return cfg;
}

SniffStage next_stage(SniffStage stage) {
    switch (stage) {
        case SniffStage::Stage1: return SniffStage::Stage2;
        case SniffStage::Stage2: return SniffStage::Stage3;
        case SniffStage::Stage3: return SniffStage::Stage4;
        default: return SniffStage::Done;
    }
}

// Stage whose parameters the packet proved wrong, given the error code.
SniffStage stage_of_error(RxErrorCode code) {
    switch (code) {
        case RxErrorCode::NoDetection: return SniffStage::Stage1;
        case RxErrorCode::SyncError: return SniffStage::Stage2;
        case RxErrorCode::SfdError: return SniffStage::Stage3;
        case RxErrorCode::StsPhdError: return SniffStage::Stage4;
    }
    return SniffStage::Stage1;
}

bool stage_before(SniffStage a, SniffStage b) {
    return static_cast<int>(a) < static_cast<int>(b);
}

} // namespace

SnifferState sniffer_init(const ParameterDomains& domains) {
    SnifferState state;
    state.stage = SniffStage::Stage1;
    state.cursor = 0;
    state.candidate = stage_defaults(domains);
    apply_cursor(state.candidate, domains, SniffStage::Stage1, 0);
    return state;
}

const PacketConfig& sniffer_candidate(const SnifferState& state) { return state.candidate; }

SnifferState sniff_step(const SnifferState& state, const RxOutcome& outcome,
                        const ParameterDomains& domains, TimePs packetTimePs) {
    if (state.done() || state.failed())
        throw std::logic_error("sniffer already finished");
    SnifferState next = state;
    next.packetsConsumed += 1;
    next.stagePackets[static_cast<std::size_t>(state.stage) - 1] += 1;
    if (packetTimePs > 0) {
        if (state.lastPacketPs == 0 ||
            packetTimePs > state.lastPacketPs + ms_to_ps(10.0))
            next.sessionsObserved += 1;
        next.lastPacketPs = packetTimePs;
    }

    if (outcome.ok) {
        next.stage = SniffStage::Done;
        return next;
    }

    const SniffStage provedWrong = stage_of_error(outcome.error);
    if (provedWrong == state.stage) {
        // The candidate's current-stage parameters are wrong: advance.
        next.cursor = state.cursor + 1;
        if (next.cursor >= stage_size(domains, state.stage)) {
            next.stage = SniffStage::Failed; // victim outside the modeled domains
            return next;
        }
        apply_cursor(next.candidate, domains, state.stage, next.cursor);
        return next;
    }
    if (stage_before(state.stage, provedWrong)) {
        // The error comes from a later field: everything up to it is correct.
        // Freeze the already-proven parameters and jump ahead.
        next.stage = next_stage(state.stage);
        while (stage_before(next.stage, provedWrong)) next.stage = next_stage(next.stage);
        next.cursor = 0;
        apply_cursor(next.candidate, domains, next.stage, 0);
        return next;
    }
    // An error from an earlier, already-proven field (e.g. a fade): keep the
    // candidate and spend another packet on it.
    return next;
}

double chunk_duration_us(const PacketConfig& cfg) {
    return static_cast<double>(cfg.pacSymbols) * kChipsPerSymbol * kPsPerChip * 1e-6;
}

TimingResult measure_intervals(const std::vector<PacketObservation>& observations,
                               const PacketConfig& sniffedConfig,
                               double txLatencyUs) {
    // Group into sessions: a poll opens a session.
    struct Session {
        std::optional<TimePs> poll, response, final_;
    };
    std::vector<Session> sessions;
    for (const auto& obs : observations) {
        if (obs.role == PacketRole::Poll) {
            sessions.push_back(Session{obs.rxTimePs, std::nullopt, std::nullopt});
        } else if (!sessions.empty()) {
            if (obs.role == PacketRole::Response) sessions.back().response = obs.rxTimePs;
            else sessions.back().final_ = obs.rxTimePs;
        }
    }
    std::vector<double> t1Us, t2Us, t3Us;
    std::optional<TimePs> lastPoll;
    TimePs anchor = 0;
    for (const auto& s : sessions) {
        if (!s.poll) continue;
        anchor = std::max(anchor, *s.poll);
        if (lastPoll) t3Us.push_back(ps_to_us(static_cast<TimeDeltaPs>(*s.poll - *lastPoll)));
        lastPoll = s.poll;
        if (s.response) t1Us.push_back(ps_to_us(static_cast<TimeDeltaPs>(*s.response - *s.poll)));
        if (s.final_) t2Us.push_back(ps_to_us(static_cast<TimeDeltaPs>(*s.final_ - *s.poll)));
    }
    if (t1Us.size() < 2)
        throw std::logic_error("interval measurement needs at least two fully observed sessions");

    auto median = [](std::vector<double> v) {
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
        return v[v.size() / 2];
    };
    auto spread = [](const std::vector<double>& v) {
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        return *mx - *mn;
    };

    TimingResult result;
    if (spread(t1Us) > 2.0 * txLatencyUs) {
        result.error = "UnstableTiming";
        return result;
    }
    TimingEstimate est;
    est.responseDelayUs = median(t1Us);
    est.finalDelayUs = t2Us.empty() ? 0.0 : median(t2Us);
    est.pollPeriodUs = t3Us.empty() ? 0.0 : median(t3Us);
    est.anchorPs = anchor;
    est.chunkUs = chunk_duration_us(sniffedConfig);
    est.packetUs = phy::packet_duration_us(sniffedConfig, 0, /*omitPhdPayload=*/true);
    est.txLatencyUs = txLatencyUs;
    result.estimate = est;
    return result;
}

std::optional<double> compute_attack_delay(const TimingEstimate& estimate) {
    const double delay =
        estimate.responseDelayUs - estimate.chunkUs - estimate.packetUs - estimate.txLatencyUs;
    if (!(delay > 0.0)) return std::nullopt;
    return delay;
}

} // namespace attack
} // namespace uwbsim

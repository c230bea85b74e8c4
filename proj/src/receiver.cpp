#include "uwbsim/receiver.hpp"

#include "uwbsim/codes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace uwbsim {

void DetectionThresholds::validate() const {
    auto in01 = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in01(presence) || !in01(legitimacy))
        throw std::invalid_argument("thresholds must lie in (0,1)");
    if (!(presence < legitimacy))
        throw std::invalid_argument("presence threshold must be below legitimacy threshold");
    if (!in01(sfd)) throw std::invalid_argument("sfd threshold must lie in (0,1)");
    if (!(stsQuality > 1.0)) throw std::invalid_argument("sts quality ratio must exceed 1");
}

const char* to_string(RxErrorCode code) {
    switch (code) {
        case RxErrorCode::NoDetection: return "NoDetection";
        case RxErrorCode::SyncError: return "SyncError";
        case RxErrorCode::SfdError: return "SfdError";
        case RxErrorCode::StsPhdError: return "StsPhdError";
    }
    return "?";
}

std::string RxOutcome::tag() const { return ok ? "Ok" : to_string(error); }

namespace rx {

namespace {

// Template with only the nonzero chips materialized.
struct SparseTemplate {
    std::vector<std::pair<std::int32_t, double>> pulses;
    double power = 0.0;
    std::int64_t lengthChips = 0;

    static SparseTemplate from_chips(const std::vector<double>& chips) {
        SparseTemplate t;
        t.lengthChips = static_cast<std::int64_t>(chips.size());
        for (std::size_t i = 0; i < chips.size(); ++i) {
            if (chips[i] != 0.0) {
                t.pulses.emplace_back(static_cast<std::int32_t>(i), chips[i]);
                t.power += chips[i] * chips[i];
            }
        }
        return t;
    }

    static SparseTemplate from_symbols(const std::vector<std::int8_t>& symbols) {
        SparseTemplate t;
        t.lengthChips = static_cast<std::int64_t>(symbols.size()) * kChipsPerSymbol;
        for (std::size_t s = 0; s < symbols.size(); ++s) {
            if (symbols[s] != 0) {
                t.pulses.emplace_back(static_cast<std::int32_t>(s * kChipsPerSymbol),
                                      static_cast<double>(symbols[s]));
                t.power += 1.0;
            }
        }
        return t;
    }
};

// Window wrapper with prefix energy sums for O(1) windowed power.
struct WindowView {
    const std::vector<double>& samples;
    std::vector<double> energyPrefix;

    explicit WindowView(const std::vector<double>& s) : samples(s) {
        energyPrefix.resize(s.size() + 1, 0.0);
        for (std::size_t i = 0; i < s.size(); ++i)
            energyPrefix[i + 1] = energyPrefix[i] + s[i] * s[i];
    }

    std::int64_t size() const { return static_cast<std::int64_t>(samples.size()); }

    double energy(std::int64_t from, std::int64_t to) const {
        from = std::clamp<std::int64_t>(from, 0, size());
        to = std::clamp<std::int64_t>(to, 0, size());
        if (to <= from) return 0.0;
        return energyPrefix[static_cast<std::size_t>(to)] - energyPrefix[static_cast<std::size_t>(from)];
    }

    double sample(std::int64_t i) const {
        if (i < 0 || i >= size()) return 0.0;
        return samples[static_cast<std::size_t>(i)];
    }

    // Eq. 3/4 at a single lag against a sparse template.
    double ncc(const SparseTemplate& t, std::int64_t lag) const {
        if (t.power <= 0.0) throw std::domain_error("zero-power template");
        double r = 0.0;
        for (const auto& [idx, val] : t.pulses) r += val * sample(lag + idx);
        const double pw = energy(lag, lag + t.lengthChips);
        if (pw <= 0.0) return 0.0;
        return std::abs(r) / std::sqrt(t.power * pw);
    }
};

struct DataDecode {
    bool ok = false;
    int payloadBits = 0;
    std::int64_t fieldChips = 0; // PHD + payload + CRC extent
};

// Majority (soft-sum) bit recovery, descramble, header CRC6, payload CRC16.
DataDecode decode_data(const WindowView& win, std::int64_t dataStart, const PacketConfig& cfg) {
    DataDecode out;
    const int chipsPerBit = phy::kSymbolsPerDataBit * kChipsPerSymbol;
    const std::uint16_t seed = phd_profile(cfg.phdProfileId).scramblerSeed;
    auto read_bits = [&](std::int64_t fromBit, int count) {
        std::vector<int> bits;
        bits.reserve(static_cast<std::size_t>(count));
        for (int k = 0; k < count; ++k) {
            const std::int64_t chip0 = dataStart + (fromBit + k) * chipsPerBit;
            double acc = 0.0;
            for (int c = 0; c < chipsPerBit; ++c) acc += win.sample(chip0 + c);
            bits.push_back(acc > 0.0 ? 1 : 0);
        }
        return bits;
    };

    auto header = read_bits(0, phy::kPhdHeaderBits);
    {
        // The scrambler is an XOR stream; re-scrambling descrambles.
        auto descrambled = phy::scramble_bits(header, seed);
        header = std::move(descrambled);
    }
    std::uint32_t len = 0;
    for (int i = 0; i < 10; ++i)
        len = (len << 1) | static_cast<std::uint32_t>(header[static_cast<std::size_t>(i)]);
    std::uint8_t hcrc = 0;
    for (int i = 10; i < 16; ++i)
        hcrc = static_cast<std::uint8_t>((hcrc << 1) | header[static_cast<std::size_t>(i)]);
    if (hcrc != phy::crc6(len)) return out;
    if (len > static_cast<std::uint32_t>(phy::kMaxPayloadBits)) return out;

    const int tailBits = static_cast<int>(len) + (len > 0 ? phy::kPayloadCrcBits : 0);
    const std::int64_t fieldChips =
        static_cast<std::int64_t>(phy::kPhdHeaderBits + tailBits) * chipsPerBit;
    if (dataStart + fieldChips > win.size()) return out;
    if (len > 0) {
        auto scrambledTail = read_bits(phy::kPhdHeaderBits, tailBits);
        // XOR with the scrambler stream continued past the header.
        auto stream = phy::scramble_bits(
            std::vector<int>(static_cast<std::size_t>(phy::kPhdHeaderBits + tailBits), 0), seed);
        std::vector<int> tail(scrambledTail.size());
        for (std::size_t i = 0; i < scrambledTail.size(); ++i)
            tail[i] = scrambledTail[i] ^ stream[static_cast<std::size_t>(phy::kPhdHeaderBits) + i];
        std::vector<int> payload(tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(len));
        std::uint16_t crc = 0;
        for (int i = 0; i < phy::kPayloadCrcBits; ++i)
            crc = static_cast<std::uint16_t>((crc << 1) |
                                             tail[static_cast<std::size_t>(len) + static_cast<std::size_t>(i)]);
        if (crc != phy::crc16_ccitt(payload)) return out;
    }
    out.ok = true;
    out.payloadBits = static_cast<int>(len);
    out.fieldChips = fieldChips;
    return out;
}

// A span counts as occupied when its mean per-chip energy reaches a tenth of
// the sparse-field level implied by the reference pulse energy.
bool span_occupied(const WindowView& win, std::int64_t from, std::int64_t to, double pulseEnergy) {
    if (to <= from) return true;
    const double mean = win.energy(from, to) / static_cast<double>(to - from);
    return mean >= 0.10 * pulseEnergy / kChipsPerSymbol;
}

std::int64_t measured_packet_end(const WindowView& win, std::int64_t searchFrom, double pulseEnergy) {
    constexpr std::int64_t kBlock = 32;
    std::int64_t lastOccupied = searchFrom;
    for (std::int64_t b = searchFrom; b + kBlock <= win.size(); b += kBlock) {
        const double mean = win.energy(b, b + kBlock) / static_cast<double>(kBlock);
        if (mean >= 0.10 * pulseEnergy / kChipsPerSymbol) lastOccupied = b + kBlock;
    }
    return lastOccupied;
}

} // namespace

CirEstimate ncc_cir(std::span<const double> received, std::span<const double> templ) {
    if (templ.empty() || received.size() < templ.size())
        throw std::invalid_argument("window must be at least as long as the template");
    double pt = 0.0;
    for (double v : templ) pt += v * v;
    if (pt <= 0.0) throw std::domain_error("zero-power template");

    const std::size_t lags = received.size() - templ.size() + 1;
    CirEstimate cir;
    cir.values.resize(lags);
    std::vector<double> prefix(received.size() + 1, 0.0);
    for (std::size_t i = 0; i < received.size(); ++i)
        prefix[i + 1] = prefix[i] + received[i] * received[i];
    for (std::size_t tau = 0; tau < lags; ++tau) {
        double r = 0.0;
        for (std::size_t i = 0; i < templ.size(); ++i) r += templ[i] * received[tau + i];
        const double pw = prefix[tau + templ.size()] - prefix[tau];
        cir.values[tau] = pw > 0.0 ? std::abs(r) / std::sqrt(pt * pw) : 0.0;
    }
    const auto peak = std::max_element(cir.values.begin(), cir.values.end());
    cir.peakLag = static_cast<std::int64_t>(peak - cir.values.begin());
    cir.peakValue = *peak;
    return cir;
}

double ncc_at(std::span<const double> received, std::span<const double> templ, std::int64_t lag) {
    double pt = 0.0, r = 0.0, pw = 0.0;
    for (double v : templ) pt += v * v;
    if (pt <= 0.0) throw std::domain_error("zero-power template");
    for (std::size_t i = 0; i < templ.size(); ++i) {
        const std::int64_t j = lag + static_cast<std::int64_t>(i);
        const double s = (j >= 0 && j < static_cast<std::int64_t>(received.size()))
                             ? received[static_cast<std::size_t>(j)]
                             : 0.0;
        r += templ[i] * s;
        pw += s * s;
    }
    return pw > 0.0 ? std::abs(r) / std::sqrt(pt * pw) : 0.0;
}

double jam_attenuation_factor(double victimPower, double jamPower) {
    if (!(victimPower > 0.0)) throw std::domain_error("victim power must be positive");
    if (jamPower < 0.0) throw std::domain_error("jam power must be non-negative");
    return std::sqrt(victimPower / (victimPower + jamPower));
}

std::optional<std::int64_t> first_peak(const CirEstimate& cir, double threshold) {
    for (std::size_t i = 0; i < cir.values.size(); ++i)
        if (cir.values[i] >= threshold) return cir.firstLag + static_cast<std::int64_t>(i);
    return std::nullopt;
}

double cross_channel_isolation(int chA, int chB) {
    const auto& channels = default_domains().channels;
    auto known = [&](int ch) {
        return std::find(channels.begin(), channels.end(), ch) != channels.end();
    };
    if (!known(chA)) throw std::domain_error("unknown channel id " + std::to_string(chA));
    if (!known(chB)) throw std::domain_error("unknown channel id " + std::to_string(chB));
    return chA == chB ? 1.0 : 1e-3;
}

RxOutcome receive_packet(const BasebandSignal& waveform,
                         const PacketConfig& rxConfig,
                         const std::optional<StsContext>& sts,
                         const DetectionThresholds& thresholds) {
    thresholds.validate();
    RxOutcome out;
    auto error = [&](RxErrorCode code) {
        out.ok = false;
        out.error = code;
        return out;
    };

    // ---- stage 1: channel + PAC gate, code-agnostic presence ---------------
    // Off-channel energy sits below the presence threshold after front-end
    // isolation, and a PAC mismatch leaves the accumulator silent; both
    // reproduce the chip's stage-1 error oracle.
    if (cross_channel_isolation(waveform.channel, rxConfig.channel) < 1.0)
        return error(RxErrorCode::NoDetection);
    if (waveform.txPacSymbols != rxConfig.pacSymbols)
        return error(RxErrorCode::NoDetection);

    WindowView win(waveform.samples);
    const std::int64_t baseOffset = std::max<std::int64_t>(waveform.baseOffsetChips, 0);
    {
        // Grid-energy contrast over one PAC chunk, maximized over chip phase:
        // an energy-template NCC that fires for any preamble code.
        const std::int64_t chunkChips =
            static_cast<std::int64_t>(rxConfig.pacSymbols) * kChipsPerSymbol;
        const std::int64_t from = baseOffset;
        const std::int64_t to = std::min<std::int64_t>(from + chunkChips, win.size());
        const double total = win.energy(from, to);
        double stat = 0.0;
        if (total > 0.0) {
            std::array<double, kChipsPerSymbol> gridEnergy{};
            for (std::int64_t i = from; i < to; ++i) {
                const double s = win.sample(i);
                gridEnergy[static_cast<std::size_t>((i - from) % kChipsPerSymbol)] += s * s;
            }
            for (double g : gridEnergy)
                stat = std::max(stat,
                                (g / total - 1.0 / kChipsPerSymbol) / (1.0 - 1.0 / kChipsPerSymbol));
        }
        if (stat < thresholds.presence) return error(RxErrorCode::NoDetection);
    }

    // ---- stage 2: SYNC ------------------------------------------------------
    const auto& code = preamble_code(rxConfig.preambleCodeIndex);
    if (rxConfig.preambleLengthSymbols % code.length() != 0)
        throw std::invalid_argument("rx config: preamble length incompatible with code length");
    const int expectedReps = rxConfig.preambleLengthSymbols / code.length();
    const std::int64_t periodChips = static_cast<std::int64_t>(code.length()) * kChipsPerSymbol;
    const SparseTemplate period = SparseTemplate::from_symbols(code.symbols);

    constexpr std::int64_t kScanBack = 8;
    constexpr std::int64_t kScanFwd = 72;
    const std::int64_t scanFrom = std::max<std::int64_t>(0, baseOffset - kScanBack);
    const std::int64_t scanTo = baseOffset + kScanFwd;

    CirEstimate syncCir;
    syncCir.firstLag = scanFrom;
    syncCir.values.reserve(static_cast<std::size_t>(scanTo - scanFrom + 1));
    for (std::int64_t lag = scanFrom; lag <= scanTo; ++lag) {
        double v = win.ncc(period, lag);
        // A code-period peak repeats one period later; noise ghosts do not.
        if (expectedReps >= 2 && v >= thresholds.presence &&
            win.ncc(period, lag + periodChips) < thresholds.presence)
            v = 0.0;
        syncCir.values.push_back(v);
    }
    {
        const auto peak = std::max_element(syncCir.values.begin(), syncCir.values.end());
        syncCir.peakLag = syncCir.firstLag + static_cast<std::int64_t>(peak - syncCir.values.begin());
        syncCir.peakValue = *peak;
    }
    // First arrival: earliest legitimate per-period peak; under heavy
    // distortion fall back to presence level so the field-level verdict below
    // is computed at the true alignment.
    auto firstPathOpt = first_peak(syncCir, thresholds.legitimacy);
    if (!firstPathOpt) firstPathOpt = first_peak(syncCir, thresholds.presence);
    if (!firstPathOpt) return error(RxErrorCode::SyncError);
    const std::int64_t syncStart = *firstPathOpt;

    if (!sts) {
        // Preamble-extent verification (the length half of the sniffing
        // oracle): consecutive code periods detected at presence level, and
        // nothing code-like past the expected end.
        int reps = 0;
        while (reps < expectedReps &&
               win.ncc(period, syncStart + static_cast<std::int64_t>(reps) * periodChips) >=
                   thresholds.presence)
            ++reps;
        if (reps != expectedReps) return error(RxErrorCode::SyncError);
        if (win.ncc(period, syncStart + static_cast<std::int64_t>(expectedReps) * periodChips) >=
            thresholds.legitimacy)
            return error(RxErrorCode::SyncError);
    }

    // Whole-SYNC NCC at the aligned lag: the field-level legitimacy verdict.
    const SparseTemplate fullSync =
        SparseTemplate::from_chips(phy::build_sync(code, rxConfig.preambleLengthSymbols));
    const double syncPeak = win.ncc(fullSync, syncStart);
    if (syncPeak < thresholds.legitimacy) return error(RxErrorCode::SyncError);
    syncCir.peakValue = syncPeak;
    syncCir.peakLag = syncStart;

    // Reference pulse energy for the structural energy checks.
    double pulseEnergy = 0.0;
    for (const auto& [idx, val] : fullSync.pulses) {
        const double s = win.sample(syncStart + idx);
        pulseEnergy += s * s;
        (void)val;
    }
    pulseEnergy /= static_cast<double>(fullSync.pulses.size());

    // ---- stage 3: SFD -------------------------------------------------------
    const std::int64_t syncChips =
        static_cast<std::int64_t>(rxConfig.preambleLengthSymbols) * kChipsPerSymbol;
    const std::int64_t sfdStart = syncStart + syncChips;
    const SparseTemplate sfd = SparseTemplate::from_symbols(sfd_pattern(rxConfig.sfdType));
    if (win.ncc(sfd, sfdStart) < thresholds.sfd) return error(RxErrorCode::SfdError);
    const std::int64_t sfdEnd = sfdStart + sfd.lengthChips;

    // ---- stage 4: STS + PHD (shared error code) ------------------------------
    const bool expectSts = rxConfig.stsMode != StsMode::Off;
    const bool expectData = rxConfig.stsMode != StsMode::NoData;
    const std::int64_t stsChips = static_cast<std::int64_t>(rxConfig.stsLengthSymbols) * kChipsPerSymbol;

    std::int64_t cursor = sfdEnd;
    std::int64_t stsStart = -1;
    if (rxConfig.stsMode == StsMode::BeforeData || rxConfig.stsMode == StsMode::NoData) {
        stsStart = cursor;
        cursor += stsChips;
    }
    if (expectData) {
        const DataDecode data = decode_data(win, cursor, rxConfig);
        if (!data.ok) return error(RxErrorCode::StsPhdError);
        cursor += data.fieldChips;
    }
    if (rxConfig.stsMode == StsMode::AfterData) {
        stsStart = cursor;
        cursor += stsChips;
    }

    std::optional<CirEstimate> stsCir;
    if (expectSts) {
        if (sts) {
            // Keyed verification: the STS CIR peak must sit at the expected
            // lag and clear the peak-to-floor quality gate.
            const SparseTemplate stsTempl =
                SparseTemplate::from_symbols(phy::sts_symbols(*sts, rxConfig.stsLengthSymbols));
            CirEstimate cir;
            cir.firstLag = stsStart - 64;
            for (std::int64_t lag = stsStart - 64; lag <= stsStart + 64; ++lag)
                cir.values.push_back(win.ncc(stsTempl, lag));
            const auto peak = std::max_element(cir.values.begin(), cir.values.end());
            cir.peakLag = cir.firstLag + static_cast<std::int64_t>(peak - cir.values.begin());
            cir.peakValue = *peak;
            if (std::llabs(cir.peakLag - stsStart) > 2) return error(RxErrorCode::StsPhdError);
            double floorAcc = 0.0;
            std::int64_t floorCount = 0;
            for (std::size_t i = 0; i < cir.values.size(); ++i) {
                const std::int64_t lag = cir.firstLag + static_cast<std::int64_t>(i);
                if (std::llabs(lag - cir.peakLag) <= 3) continue;
                floorAcc += cir.values[i] * cir.values[i];
                ++floorCount;
            }
            const double floorRms =
                floorCount > 0 ? std::sqrt(floorAcc / static_cast<double>(floorCount)) : 0.0;
            if (floorRms <= 0.0 || cir.peakValue / floorRms < thresholds.stsQuality)
                return error(RxErrorCode::StsPhdError);
            stsCir = std::move(cir);
        } else {
            // Keyless (sniffer) verification: structure only; the field must
            // carry pulse energy through its full extent.
            if (!span_occupied(win, stsStart, stsStart + stsChips, pulseEnergy))
                return error(RxErrorCode::StsPhdError);
            if (!span_occupied(win, stsStart + stsChips - 128, stsStart + stsChips, pulseEnergy))
                return error(RxErrorCode::StsPhdError);
        }
    }
    if (!sts) {
        // Packet-extent check: the measured energy extent must match the
        // candidate layout (catches a wrong stsMode/stsLength even when the
        // data field happens to decode).
        const std::int64_t measuredEnd = measured_packet_end(win, sfdEnd, pulseEnergy);
        if (std::llabs(measuredEnd - cursor) > 32) return error(RxErrorCode::StsPhdError);
    }

    out.ok = true;
    out.error = RxErrorCode::NoDetection;
    out.rxTimestampPs = waveform.startTimePs + chips_to_ps(syncStart);
    out.syncCir = std::move(syncCir);
    out.stsCir = std::move(stsCir);
    return out;
}

} // namespace rx
} // namespace uwbsim

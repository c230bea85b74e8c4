#include "uwbsim/phy.hpp"

#include "uwbsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uwbsim::phy {

namespace {

void place_symbol_pulses(std::vector<double>& chips, std::int64_t startChip,
                         const std::vector<std::int8_t>& symbols) {
    for (std::size_t s = 0; s < symbols.size(); ++s) {
        if (symbols[s] != 0)
            chips[static_cast<std::size_t>(startChip) + s * kChipsPerSymbol] =
                static_cast<double>(symbols[s]);
    }
}

} // namespace

std::vector<double> build_sync(const TernaryCode& code, int preambleLengthSymbols) {
    if (code.symbols.empty()) throw std::invalid_argument("empty preamble code");
    if (preambleLengthSymbols <= 0)
        throw std::invalid_argument("preamble length must be positive");
    if (preambleLengthSymbols % code.length() != 0)
        throw std::invalid_argument("preamble length must be a multiple of the code length");
    std::vector<double> chips(static_cast<std::size_t>(preambleLengthSymbols) * kChipsPerSymbol, 0.0);
    const int reps = preambleLengthSymbols / code.length();
    for (int r = 0; r < reps; ++r)
        place_symbol_pulses(chips, static_cast<std::int64_t>(r) * code.length() * kChipsPerSymbol,
                            code.symbols);
    return chips;
}

std::vector<double> build_sync(const PacketConfig& cfg) {
    return build_sync(preamble_code(cfg.preambleCodeIndex), cfg.preambleLengthSymbols);
}

std::vector<std::int8_t> sts_symbols(const StsContext& sts, int lengthSymbols) {
    if (lengthSymbols <= 0) throw std::invalid_argument("sts length must be positive");
    std::vector<std::int8_t> symbols(static_cast<std::size_t>(lengthSymbols));
    SplitMix64 gen(mix_seed(sts.key.hi, sts.key.lo, sts.counter));
    std::uint64_t word = 0;
    for (int i = 0; i < lengthSymbols; ++i) {
        if (i % 64 == 0) word = gen.next();
        symbols[static_cast<std::size_t>(i)] = (word >> (i % 64)) & 1 ? 1 : -1;
    }
    return symbols;
}

std::vector<double> build_sts(const StsContext& sts, const PacketConfig& cfg) {
    if (cfg.stsMode == StsMode::Off)
        throw std::logic_error("build_sts requires stsMode != off");
    auto symbols = sts_symbols(sts, cfg.stsLengthSymbols);
    std::vector<double> chips(symbols.size() * kChipsPerSymbol, 0.0);
    place_symbol_pulses(chips, 0, symbols);
    return chips;
}

std::vector<double> build_sfd(const PacketConfig& cfg) {
    const auto& pattern = sfd_pattern(cfg.sfdType);
    std::vector<double> chips(pattern.size() * kChipsPerSymbol, 0.0);
    place_symbol_pulses(chips, 0, pattern);
    return chips;
}

std::uint16_t crc16_ccitt(const std::vector<int>& bits) {
    std::uint16_t crc = 0xFFFF;
    for (int bit : bits) {
        bool top = (crc & 0x8000) != 0;
        crc = static_cast<std::uint16_t>(crc << 1);
        if (top != (bit != 0)) crc ^= 0x1021;
    }
    return crc;
}

std::uint8_t crc6(std::uint32_t value10) {
    std::uint8_t crc = 0x3F;
    for (int i = 9; i >= 0; --i) {
        bool top = (crc & 0x20) != 0;
        crc = static_cast<std::uint8_t>((crc << 1) & 0x3F);
        if (top != (((value10 >> i) & 1u) != 0)) crc ^= 0x27;
    }
    return crc;
}

std::vector<int> scramble_bits(std::vector<int> bits, std::uint16_t seed) {
    std::uint16_t lfsr = seed == 0 ? 0xACE1 : seed;
    for (int& b : bits) {
        // Galois LFSR, taps 16,14,13,11.
        bool out = (lfsr & 1u) != 0;
        lfsr >>= 1;
        if (out) lfsr ^= 0xB400;
        b ^= out ? 1 : 0;
    }
    return bits;
}

std::vector<int> data_field_bits(const PacketConfig& cfg, const std::vector<int>& payloadBits) {
    if (payloadBits.size() > static_cast<std::size_t>(kMaxPayloadBits))
        throw std::invalid_argument("payload too long");
    const auto len = static_cast<std::uint32_t>(payloadBits.size());
    std::vector<int> bits;
    bits.reserve(kPhdHeaderBits + payloadBits.size() + kPayloadCrcBits);
    for (int i = 9; i >= 0; --i) bits.push_back((len >> i) & 1u);
    std::uint8_t hcrc = crc6(len);
    for (int i = 5; i >= 0; --i) bits.push_back((hcrc >> i) & 1u);
    bits.insert(bits.end(), payloadBits.begin(), payloadBits.end());
    if (!payloadBits.empty()) {
        std::uint16_t crc = crc16_ccitt(payloadBits);
        for (int i = 15; i >= 0; --i) bits.push_back((crc >> i) & 1u);
    }
    return scramble_bits(std::move(bits), phd_profile(cfg.phdProfileId).scramblerSeed);
}

int data_bit_count(const PacketConfig& cfg, int payloadBits) {
    (void)cfg;
    return kPhdHeaderBits + payloadBits + (payloadBits > 0 ? kPayloadCrcBits : 0);
}

std::vector<double> build_phd_payload(const PacketConfig& cfg, const std::vector<int>& payloadBits) {
    const auto bits = data_field_bits(cfg, payloadBits);
    // Dense BPSK: every chip of a data symbol carries the bit polarity.
    std::vector<double> chips(bits.size() * kSymbolsPerDataBit * kChipsPerSymbol, 0.0);
    std::size_t pos = 0;
    for (int bit : bits) {
        const double amp = bit ? 1.0 : -1.0;
        for (int s = 0; s < kSymbolsPerDataBit * kChipsPerSymbol; ++s) chips[pos++] = amp;
    }
    return chips;
}

std::int64_t FieldLayout::spanStart(const std::string& name) const {
    for (const auto& s : spans)
        if (s.name == name) return s.startChip;
    throw std::invalid_argument("layout has no field " + name);
}

std::int64_t FieldLayout::spanEnd(const std::string& name) const {
    for (const auto& s : spans)
        if (s.name == name) return s.endChip;
    throw std::invalid_argument("layout has no field " + name);
}

bool FieldLayout::hasField(const std::string& name) const {
    for (const auto& s : spans)
        if (s.name == name) return true;
    return false;
}

FieldLayout field_layout(const PacketConfig& cfg, int payloadBits, bool omitPhdPayload) {
    FieldLayout layout;
    std::int64_t pos = 0;
    auto push = [&](const std::string& name, std::int64_t chips) {
        layout.spans.push_back(FieldSpan{name, pos, pos + chips});
        pos += chips;
    };
    push("SYNC", static_cast<std::int64_t>(cfg.preambleLengthSymbols) * kChipsPerSymbol);
    push("SFD", static_cast<std::int64_t>(sfd_pattern(cfg.sfdType).size()) * kChipsPerSymbol);
    const std::int64_t stsChips = static_cast<std::int64_t>(cfg.stsLengthSymbols) * kChipsPerSymbol;
    if (omitPhdPayload) {
        push("STS", stsChips);
    } else {
        const int headerBits = kPhdHeaderBits;
        const int tailBits = payloadBits + (payloadBits > 0 ? kPayloadCrcBits : 0);
        const std::int64_t phdChips =
            static_cast<std::int64_t>(headerBits) * kSymbolsPerDataBit * kChipsPerSymbol;
        const std::int64_t payloadChips =
            static_cast<std::int64_t>(tailBits) * kSymbolsPerDataBit * kChipsPerSymbol;
        switch (cfg.stsMode) {
            case StsMode::Off:
                push("PHD", phdChips);
                push("PAYLOAD", payloadChips);
                break;
            case StsMode::BeforeData:
                push("STS", stsChips);
                push("PHD", phdChips);
                push("PAYLOAD", payloadChips);
                break;
            case StsMode::AfterData:
                push("PHD", phdChips);
                push("PAYLOAD", payloadChips);
                push("STS", stsChips);
                break;
            case StsMode::NoData:
                push("STS", stsChips);
                break;
        }
    }
    layout.totalChips = pos;
    return layout;
}

BasebandSignal assemble_packet(const PacketConfig& cfg,
                               const std::optional<StsContext>& sts,
                               const std::vector<int>& payloadBits,
                               const PowerProfile& profile,
                               bool omitPhdPayload) {
    profile.validate();
    const bool hasSts = cfg.stsMode != StsMode::Off;
    if (hasSts && !sts)
        throw std::invalid_argument("config carries an STS field but no STS context was given");
    FieldLayout layout = field_layout(cfg, static_cast<int>(payloadBits.size()), omitPhdPayload);

    BasebandSignal out;
    out.samples.assign(static_cast<std::size_t>(layout.totalChips), 0.0);
    out.fieldBoundaries = layout.spans;
    out.channel = cfg.channel;
    out.txPacSymbols = cfg.pacSymbols;

    auto emit = [&](const std::string& name, const std::vector<double>& chips, double gain) {
        const std::int64_t start = layout.spanStart(name);
        for (std::size_t i = 0; i < chips.size(); ++i)
            out.samples[static_cast<std::size_t>(start) + i] = chips[i] * gain;
    };

    emit("SYNC", build_sync(cfg), profile.sync);
    emit("SFD", build_sfd(cfg), profile.sfd);
    if (layout.hasField("STS")) emit("STS", build_sts(*sts, cfg), profile.sts);
    if (layout.hasField("PHD")) {
        const auto dataChips = build_phd_payload(cfg, payloadBits);
        const std::int64_t phdStart = layout.spanStart("PHD");
        const std::int64_t phdEnd = layout.spanEnd("PHD");
        for (std::size_t i = 0; i < dataChips.size(); ++i) {
            const std::int64_t chip = phdStart + static_cast<std::int64_t>(i);
            const double gain = chip < phdEnd ? profile.phd : profile.payload;
            out.samples[static_cast<std::size_t>(chip)] = dataChips[i] * gain;
        }
    }
    return out;
}

double nominal_field_power(const PacketConfig& cfg, const std::string& fieldName) {
    if (fieldName == "SYNC") {
        const auto& code = preamble_code(cfg.preambleCodeIndex);
        return static_cast<double>(code.weight()) / code.length() / kChipsPerSymbol;
    }
    if (fieldName == "SFD" || fieldName == "STS") return 1.0 / kChipsPerSymbol;
    if (fieldName == "PHD" || fieldName == "PAYLOAD") return 1.0;
    throw std::invalid_argument("unknown field " + fieldName);
}

std::int64_t packet_duration_chips(const PacketConfig& cfg, int payloadBits, bool omitPhdPayload) {
    return field_layout(cfg, payloadBits, omitPhdPayload).totalChips;
}

double packet_duration_us(const PacketConfig& cfg, int payloadBits, bool omitPhdPayload) {
    return static_cast<double>(packet_duration_chips(cfg, payloadBits, omitPhdPayload)) * kPsPerChip * 1e-6;
}

} // namespace uwbsim::phy

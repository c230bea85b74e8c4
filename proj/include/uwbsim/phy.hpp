// Waveform generation for every HRP packet field and whole-packet assembly.
#pragma once

#include "uwbsim/codes.hpp"
#include "uwbsim/packet_config.hpp"
#include "uwbsim/signal.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace uwbsim {

// 128-bit STS key plus the per-packet counter both ends derive from protocol
// position. Same (key, counter) always yields the same sequence.
struct StsKey {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;
    bool operator==(const StsKey&) const = default;
};

struct StsContext {
    StsKey key;
    std::uint64_t counter = 0;
};

namespace phy {

// SYNC: the ternary code repeated until `preambleLengthSymbols` symbols are
// emitted, one pulse per symbol on the chip grid. preambleLength must be a
// positive multiple of the code length (std::invalid_argument otherwise).
std::vector<double> build_sync(const TernaryCode& code, int preambleLengthSymbols);
std::vector<double> build_sync(const PacketConfig& cfg);

// STS: keyed pseudo-random +-1 symbols, one pulse per symbol. Requires
// stsMode != Off at config level (std::logic_error otherwise).
std::vector<std::int8_t> sts_symbols(const StsContext& sts, int lengthSymbols);
std::vector<double> build_sts(const StsContext& sts, const PacketConfig& cfg);

// SFD: fixed 16-symbol binary pattern per sfdType.
std::vector<double> build_sfd(const PacketConfig& cfg);

// PHD + payload: dense BPSK chips (every chip of a symbol carries the bit),
// 13 symbols per bit. Layout: 16-bit header (10-bit payload length + 6-bit
// header CRC), payload bits, 16-bit payload CRC (omitted when payload empty).
// All bits are whitened with the profile's scrambler.
inline constexpr int kPhdHeaderBits = 16;
inline constexpr int kPayloadCrcBits = 16;
inline constexpr int kSymbolsPerDataBit = 13;
inline constexpr int kMaxPayloadBits = 1023;

std::vector<double> build_phd_payload(const PacketConfig& cfg, const std::vector<int>& payloadBits);

// Bit-level helpers shared with the receiver.
std::vector<int> data_field_bits(const PacketConfig& cfg, const std::vector<int>& payloadBits);
std::vector<int> scramble_bits(std::vector<int> bits, std::uint16_t seed);
std::uint16_t crc16_ccitt(const std::vector<int>& bits);
std::uint8_t crc6(std::uint32_t value10);

// Field layout in chips for a config (payload length needed for data extent).
struct FieldLayout {
    std::vector<FieldSpan> spans; // contiguous, covering [0, totalChips)
    std::int64_t totalChips = 0;
    std::int64_t spanStart(const std::string& name) const;
    std::int64_t spanEnd(const std::string& name) const;
    bool hasField(const std::string& name) const;
};
FieldLayout field_layout(const PacketConfig& cfg, int payloadBits, bool omitPhdPayload);

int data_bit_count(const PacketConfig& cfg, int payloadBits); // header+payload+crc

// Concatenate fields with per-field amplitude scaling. With omitPhdPayload
// the packet carries SYNC|SFD|STS only (the attack-packet format).
BasebandSignal assemble_packet(const PacketConfig& cfg,
                               const std::optional<StsContext>& sts,
                               const std::vector<int>& payloadBits,
                               const PowerProfile& profile,
                               bool omitPhdPayload);

// Nominal mean-square power of a field at unit gain (used by tests and by
// the harness to convert field power-gain targets into amplitude gains).
double nominal_field_power(const PacketConfig& cfg, const std::string& fieldName);

std::int64_t packet_duration_chips(const PacketConfig& cfg, int payloadBits, bool omitPhdPayload);
double packet_duration_us(const PacketConfig& cfg, int payloadBits, bool omitPhdPayload);

} // namespace phy
} // namespace uwbsim

// Physical-layer packet configuration: the full tuple of parameters a COTS
// chip exposes, plus the finite option domains the sniffer searches.
#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace uwbsim {

// Field ordering per STS mode:
//   Off:          SYNC | SFD | PHD | PAYLOAD
//   BeforeData:   SYNC | SFD | STS | PHD | PAYLOAD
//   AfterData:    SYNC | SFD | PHD | PAYLOAD | STS
//   NoData:       SYNC | SFD | STS
enum class StsMode : std::uint8_t { Off = 0, BeforeData = 1, AfterData = 2, NoData = 3 };

const char* to_string(StsMode mode);

struct PhdProfile {
    int id = 0;
    std::uint16_t scramblerSeed = 0;
    double dataRateMbps = 0.0;   // descriptive, bundled parameters
    int phdRateIndex = 0;
    int pdoaMode = 0;
};

// The four PHD bundles: dataRate/phdMode/phdRate/pdoaMode move together.
const PhdProfile& phd_profile(int id);

struct PacketConfig {
    int channel = 9;              // UWB channel id
    int preambleCodeIndex = 9;    // index into the ternary code table
    int preambleLengthSymbols = 2048; // total code symbols in SYNC (reps * code length)
    int pacSymbols = 32;          // preamble accumulation chunk, in symbols
    int sfdType = 0;
    StsMode stsMode = StsMode::BeforeData;
    int stsLengthSymbols = 512;
    int phdProfileId = 0;

    bool operator==(const PacketConfig&) const = default;
};

struct ParameterDomains {
    std::vector<int> channels;
    std::vector<int> pacs;
    std::vector<int> codeIndices;
    std::vector<int> preambleLengths;
    std::vector<int> sfdTypes;
    std::vector<StsMode> stsModes;
    std::vector<int> stsLengths;
    std::vector<int> phdProfiles;
};

// Built-in option sets. Cartesian product is 516,096; the staged sums are
// 8 + 144 + 4 + 112 = 268.
const ParameterDomains& default_domains();

// Throws std::invalid_argument when any field is outside its domain or the
// divisibility constraints (pac | preambleLength, codeLen | preambleLength)
// are violated.
void validate_config(const PacketConfig& cfg, const ParameterDomains& domains = default_domains());
bool config_is_valid(const PacketConfig& cfg, const ParameterDomains& domains = default_domains());

std::string describe(const PacketConfig& cfg);

} // namespace uwbsim

#include "uwbsim/packet_config.hpp"

#include "uwbsim/codes.hpp"

#include <algorithm>
#include <sstream>

namespace uwbsim {

const char* to_string(StsMode mode) {
    switch (mode) {
        case StsMode::Off: return "off";
        case StsMode::BeforeData: return "sts-before-data";
        case StsMode::AfterData: return "sts-after-data";
        case StsMode::NoData: return "sts-no-data";
    }
    return "?";
}

const PhdProfile& phd_profile(int id) {
    static const std::array<PhdProfile, 4> profiles = {{
        {0, 0xACE1, 0.85, 0, 0},
        {1, 0xB7D2, 6.81, 1, 0},
        {2, 0x5EC3, 27.2, 1, 1},
        {3, 0x91F4, 6.81, 0, 3},
    }};
    if (id < 0 || id >= static_cast<int>(profiles.size()))
        throw std::domain_error("unknown PHD profile id " + std::to_string(id));
    return profiles[static_cast<std::size_t>(id)];
}

const ParameterDomains& default_domains() {
    static const ParameterDomains domains = [] {
        ParameterDomains d;
        d.channels = {5, 9};
        d.pacs = {4, 8, 16, 32};
        d.codeIndices = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
        d.preambleLengths = {128, 256, 512, 1024, 2048, 3072, 4096, 6144, 8192};
        d.sfdTypes = {0, 1, 2, 3};
        d.stsModes = {StsMode::Off, StsMode::BeforeData, StsMode::AfterData, StsMode::NoData};
        d.stsLengths = {32, 64, 128, 256, 512, 1024, 2048};
        d.phdProfiles = {0, 1, 2, 3};
        return d;
    }();
    return domains;
}

namespace {

template <typename T>
bool contains(const std::vector<T>& options, T value) {
    return std::find(options.begin(), options.end(), value) != options.end();
}

} // namespace

void validate_config(const PacketConfig& cfg, const ParameterDomains& d) {
    auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
    if (!contains(d.channels, cfg.channel)) fail("channel " + std::to_string(cfg.channel) + " not in domain");
    if (!contains(d.codeIndices, cfg.preambleCodeIndex))
        fail("preamble code index " + std::to_string(cfg.preambleCodeIndex) + " not in domain");
    if (!contains(d.preambleLengths, cfg.preambleLengthSymbols))
        fail("preamble length " + std::to_string(cfg.preambleLengthSymbols) + " not in domain");
    if (!contains(d.pacs, cfg.pacSymbols)) fail("pac " + std::to_string(cfg.pacSymbols) + " not in domain");
    if (!contains(d.sfdTypes, cfg.sfdType)) fail("sfd type " + std::to_string(cfg.sfdType) + " not in domain");
    if (!contains(d.stsModes, cfg.stsMode)) fail("sts mode not in domain");
    if (!contains(d.stsLengths, cfg.stsLengthSymbols))
        fail("sts length " + std::to_string(cfg.stsLengthSymbols) + " not in domain");
    if (!contains(d.phdProfiles, cfg.phdProfileId))
        fail("phd profile " + std::to_string(cfg.phdProfileId) + " not in domain");
    if (cfg.preambleLengthSymbols % cfg.pacSymbols != 0)
        fail("pac must divide the preamble length");
    const auto& code = preamble_code(cfg.preambleCodeIndex);
    if (cfg.preambleLengthSymbols % code.length() != 0)
        fail("preamble length must be a multiple of the code length");
}

bool config_is_valid(const PacketConfig& cfg, const ParameterDomains& domains) {
    try {
        validate_config(cfg, domains);
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

std::string describe(const PacketConfig& cfg) {
    std::ostringstream os;
    os << "chan=" << cfg.channel << " code=" << cfg.preambleCodeIndex
       << " plen=" << cfg.preambleLengthSymbols << " pac=" << cfg.pacSymbols
       << " sfd=" << cfg.sfdType << " stsMode=" << to_string(cfg.stsMode)
       << " stsLen=" << cfg.stsLengthSymbols << " phd=" << cfg.phdProfileId;
    return os.str();
}

} // namespace uwbsim

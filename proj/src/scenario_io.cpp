#include "uwbsim/scenario_io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

using nlohmann::json;

namespace uwbsim::scenario_io {

namespace {

StsMode sts_mode_from_string(const std::string& s) {
    for (StsMode m : {StsMode::Off, StsMode::BeforeData, StsMode::AfterData, StsMode::NoData})
        if (s == to_string(m)) return m;
    throw std::invalid_argument("unknown sts mode: " + s);
}

json config_to_json(const PacketConfig& c) {
    return json{{"channel", c.channel},
                {"preamble_code_index", c.preambleCodeIndex},
                {"preamble_length_symbols", c.preambleLengthSymbols},
                {"pac_symbols", c.pacSymbols},
                {"sfd_type", c.sfdType},
                {"sts_mode", to_string(c.stsMode)},
                {"sts_length_symbols", c.stsLengthSymbols},
                {"phd_profile", c.phdProfileId}};
}

PacketConfig config_from_json(const json& j) {
    PacketConfig c;
    c.channel = j.at("channel").get<int>();
    c.preambleCodeIndex = j.at("preamble_code_index").get<int>();
    c.preambleLengthSymbols = j.at("preamble_length_symbols").get<int>();
    c.pacSymbols = j.at("pac_symbols").get<int>();
    c.sfdType = j.at("sfd_type").get<int>();
    c.stsMode = sts_mode_from_string(j.at("sts_mode").get<std::string>());
    c.stsLengthSymbols = j.at("sts_length_symbols").get<int>();
    c.phdProfileId = j.at("phd_profile").get<int>();
    return c;
}

json position_to_json(const NodePosition& p) { return json{{"x", p.x}, {"y", p.y}}; }

NodePosition position_from_json(const json& j) {
    return NodePosition{j.at("x").get<double>(), j.at("y").get<double>()};
}

json clock_to_json(const ClockModel& c) {
    return json{{"drift_ppm", c.driftPpm}, {"offset_ps", c.offsetPs}};
}

ClockModel clock_from_json(const json& j) {
    ClockModel c;
    c.driftPpm = j.value("drift_ppm", 0.0);
    c.offsetPs = j.value("offset_ps", std::int64_t{0});
    return c;
}

} // namespace

Scenario from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scenario parse error: ") + e.what());
    }
    Scenario sc;
    sc.schemaVersion = j.at("schemaVersion").get<int>();
    if (sc.schemaVersion != 1) throw std::invalid_argument("unsupported schemaVersion");
    sc.seed = j.value("seed", std::uint64_t{1});
    sc.durationSec = j.at("duration_sec").get<double>();

    if (j.contains("channel")) {
        const json& c = j["channel"];
        sc.channelParams.pathLossExponent = c.value("path_loss_exponent", 2.0);
        sc.channelParams.referenceLossAt1m = c.value("reference_loss_at_1m", 1.0);
        sc.channelParams.noisePowerDensity = c.value("noise_power_density", 0.0);
        sc.channelParams.rngSeed = c.value("rng_seed", sc.seed);
        if (c.contains("multipath_taps")) {
            for (const auto& t : c["multipath_taps"])
                sc.channelParams.taps.push_back(
                    MultipathTap{t.at("delay_chips").get<int>(), t.at("amplitude").get<double>()});
        }
    } else {
        sc.channelParams.rngSeed = sc.seed;
    }

    if (j.contains("thresholds")) {
        const json& t = j["thresholds"];
        sc.thresholds.presence = t.value("presence", 0.2);
        sc.thresholds.legitimacy = t.value("legitimacy", 0.4);
        sc.thresholds.sfd = t.value("sfd", 0.6);
        sc.thresholds.stsQuality = t.value("sts_quality", 5.0);
    }

    for (const auto& p : j.at("pairs")) {
        RangingPairSpec spec;
        spec.name = p.at("name").get<std::string>();
        spec.initiator = position_from_json(p.at("initiator"));
        spec.responder = position_from_json(p.at("responder"));
        spec.config = config_from_json(p.at("config"));
        spec.key = StsKey{p.value("key_hi", std::uint64_t{0x1234}), p.value("key_lo", std::uint64_t{0x5678})};
        if (p.contains("initiator_clock")) spec.initiatorClock = clock_from_json(p["initiator_clock"]);
        if (p.contains("responder_clock")) spec.responderClock = clock_from_json(p["responder_clock"]);
        if (p.contains("schedule")) {
            const json& s = p["schedule"];
            spec.schedule.pollToResponseUs = s.value("poll_to_response_us", 800.0);
            spec.schedule.pollToFinalUs = s.value("poll_to_final_us", 1600.0);
            spec.schedule.pollPeriodMs = s.value("poll_period_ms", 167.0);
            spec.schedule.randomJitterBoundUs = s.value("random_jitter_bound_us", 0.0);
        }
        spec.mode = p.value("mode", std::string("ds")) == "ss" ? RangingMode::SS : RangingMode::DS;
        spec.startOffsetPs = us_to_ps(p.value("start_offset_us", 0.0));
        spec.payloadBits = p.value("payload_bits", 40);
        spec.schedule.packetDurationUs = phy::packet_duration_us(spec.config, spec.payloadBits, false);
        sc.pairs.push_back(std::move(spec));
    }

    if (j.contains("attacker")) {
        const json& a = j["attacker"];
        const std::string mode = a.value("mode", "off");
        if (mode == "off") sc.attacker.mode = AttackerMode::Off;
        else if (mode == "full") sc.attacker.mode = AttackerMode::Full;
        else if (mode == "known-config") sc.attacker.mode = AttackerMode::KnownConfig;
        else throw std::invalid_argument("unknown attacker mode: " + mode);
        if (sc.attacker.mode != AttackerMode::Off) {
            sc.attacker.position = position_from_json(a.at("position"));
            sc.attacker.targetPair = a.value("target_pair", std::size_t{0});
            sc.attacker.plan.targetPacket = PacketRole::Response;
            const std::string target = a.value("target_packet", "response");
            if (target == "final") sc.attacker.plan.targetPacket = PacketRole::Final;
            else if (target == "poll") sc.attacker.plan.targetPacket = PacketRole::Poll;
            sc.attacker.plan.syncPowerGain = a.value("sync_power_gain", 8.0);
            sc.attacker.plan.jamCodeIndex = a.value("jam_code_index", 12);
            if (a.contains("jam_config")) {
                sc.attacker.plan.jamConfig = config_from_json(a["jam_config"]);
            } else if (sc.attacker.targetPair < sc.pairs.size()) {
                sc.attacker.plan.jamConfig = sc.pairs[sc.attacker.targetPair].config;
                sc.attacker.plan.jamConfig.preambleCodeIndex = sc.attacker.plan.jamCodeIndex;
            }
            if (a.contains("arrival_delay_us"))
                sc.attacker.arrivalDelayUs = a["arrival_delay_us"].get<double>();
            sc.attacker.targetField = a.value("target_field", std::string("SYNC"));
            sc.attacker.perturbTxLatency = a.value("perturb_tx_latency", false);
            sc.attacker.txLatencyNominalUs = a.value("tx_latency_us", 20.0);
            sc.attacker.txLatencySigmaUs = a.value("tx_latency_sigma_us", 2.74);
        }
    }
    return sc;
}

Scenario load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string to_json_text(const Scenario& sc) {
    json j;
    j["schemaVersion"] = sc.schemaVersion;
    j["seed"] = sc.seed;
    j["duration_sec"] = sc.durationSec;
    j["channel"] = json{{"path_loss_exponent", sc.channelParams.pathLossExponent},
                        {"reference_loss_at_1m", sc.channelParams.referenceLossAt1m},
                        {"noise_power_density", sc.channelParams.noisePowerDensity},
                        {"rng_seed", sc.channelParams.rngSeed}};
    if (!sc.channelParams.taps.empty()) {
        json taps = json::array();
        for (const auto& t : sc.channelParams.taps)
            taps.push_back(json{{"delay_chips", t.delayChips}, {"amplitude", t.amplitude}});
        j["channel"]["multipath_taps"] = taps;
    }
    j["thresholds"] = json{{"presence", sc.thresholds.presence},
                           {"legitimacy", sc.thresholds.legitimacy},
                           {"sfd", sc.thresholds.sfd},
                           {"sts_quality", sc.thresholds.stsQuality}};
    json pairs = json::array();
    for (const auto& p : sc.pairs) {
        json pj{{"name", p.name},
                {"initiator", position_to_json(p.initiator)},
                {"responder", position_to_json(p.responder)},
                {"config", config_to_json(p.config)},
                {"key_hi", p.key.hi},
                {"key_lo", p.key.lo},
                {"initiator_clock", clock_to_json(p.initiatorClock)},
                {"responder_clock", clock_to_json(p.responderClock)},
                {"schedule", json{{"poll_to_response_us", p.schedule.pollToResponseUs},
                                  {"poll_to_final_us", p.schedule.pollToFinalUs},
                                  {"poll_period_ms", p.schedule.pollPeriodMs},
                                  {"random_jitter_bound_us", p.schedule.randomJitterBoundUs}}},
                {"mode", p.mode == RangingMode::SS ? "ss" : "ds"},
                {"start_offset_us", ps_to_us(static_cast<TimeDeltaPs>(p.startOffsetPs))},
                {"payload_bits", p.payloadBits}};
        pairs.push_back(pj);
    }
    j["pairs"] = pairs;
    if (sc.attacker.mode != AttackerMode::Off) {
        json a;
        a["mode"] = sc.attacker.mode == AttackerMode::Full ? "full" : "known-config";
        a["position"] = position_to_json(sc.attacker.position);
        a["target_pair"] = sc.attacker.targetPair;
        a["target_packet"] = to_string(sc.attacker.plan.targetPacket);
        a["sync_power_gain"] = sc.attacker.plan.syncPowerGain;
        a["jam_code_index"] = sc.attacker.plan.jamCodeIndex;
        a["jam_config"] = config_to_json(sc.attacker.plan.jamConfig);
        if (sc.attacker.arrivalDelayUs) a["arrival_delay_us"] = *sc.attacker.arrivalDelayUs;
        a["target_field"] = sc.attacker.targetField;
        a["perturb_tx_latency"] = sc.attacker.perturbTxLatency;
        a["tx_latency_us"] = sc.attacker.txLatencyNominalUs;
        a["tx_latency_sigma_us"] = sc.attacker.txLatencySigmaUs;
        j["attacker"] = a;
    } else {
        j["attacker"] = json{{"mode", "off"}};
    }
    return j.dump(2) + "\n";
}

void save_file(const Scenario& scenario, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write scenario file: " + path);
    out << to_json_text(scenario);
}

} // namespace uwbsim::scenario_io

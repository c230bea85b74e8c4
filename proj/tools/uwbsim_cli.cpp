// uwbsim command line: scenario runs, experiments, sniffing demo, domain
// listing and trace reports.
#include "uwbsim/harness.hpp"
#include "uwbsim/rng.hpp"
#include "uwbsim/scenario_io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path output_dir(const std::string& cliOut) {
    if (!cliOut.empty()) return cliOut;
    if (const char* env = std::getenv("UWBSIM_OUTPUT_DIR")) return env;
    return fs::current_path();
}

int cmd_simulate(const std::string& scenarioPath, const std::string& out) {
    const auto scenario = uwbsim::scenario_io::load_file(scenarioPath);
    const auto trace = uwbsim::sim::run(scenario);
    const fs::path dir = output_dir(out);
    fs::create_directories(dir);
    trace.write_events_jsonl((dir / "trace.jsonl").string());
    trace.write_summary_json((dir / "summary.json").string());
    std::cout << trace.summary_json();
    std::cout << "trace: " << (dir / "trace.jsonl").string() << "\n";
    return 0;
}

int cmd_sniff_demo(std::uint64_t seed, const std::string& out) {
    auto scenario = uwbsim::harness::baseline_scenario(seed);
    // Random victim structure; the attacker has to discover it.
    uwbsim::SplitMix64 gen(uwbsim::mix_seed(seed, 0xDE30ULL));
    const auto& d = uwbsim::default_domains();
    auto& cfg = scenario.pairs[0].config;
    cfg.channel = d.channels[gen.next_below(d.channels.size())];
    cfg.pacSymbols = d.pacs[gen.next_below(d.pacs.size())];
    cfg.preambleCodeIndex = d.codeIndices[gen.next_below(d.codeIndices.size())];
    cfg.preambleLengthSymbols = d.preambleLengths[gen.next_below(d.preambleLengths.size())];
    cfg.sfdType = d.sfdTypes[gen.next_below(d.sfdTypes.size())];
    cfg.stsMode = d.stsModes[gen.next_below(d.stsModes.size())];
    cfg.stsLengthSymbols = d.stsLengths[gen.next_below(d.stsLengths.size())];
    cfg.phdProfileId = d.phdProfiles[gen.next_below(d.phdProfiles.size())];
    scenario.pairs[0].schedule.packetDurationUs =
        uwbsim::phy::packet_duration_us(cfg, scenario.pairs[0].payloadBits, false);

    scenario.durationSec = 20.0;
    scenario.attacker.mode = uwbsim::AttackerMode::Full;
    scenario.attacker.plan.syncPowerGain = 8.0;
    scenario.attacker.plan.jamCodeIndex = cfg.preambleCodeIndex == 12 ? 9 : 12;
    scenario.attacker.plan.jamConfig = cfg;
    scenario.attacker.plan.jamConfig.preambleCodeIndex = scenario.attacker.plan.jamCodeIndex;

    std::cout << "victim config: " << uwbsim::describe(cfg) << "\n";
    const auto trace = uwbsim::sim::run(scenario);
    const auto& sn = trace.sniffer;
    std::cout << "sniffer done: " << (sn.done ? "yes" : "no")
              << ", packets used: " << sn.packetsConsumed << " (stages "
              << sn.stagePackets[0] << "/" << sn.stagePackets[1] << "/" << sn.stagePackets[2]
              << "/" << sn.stagePackets[3] << ")\n";
    if (sn.done) std::cout << "sniffed config: " << uwbsim::describe(sn.sniffedConfig) << "\n";
    if (sn.attackDelayUs) std::cout << "attack delay: " << *sn.attackDelayUs << " us\n";
    std::cout << "victim success rate under attack: " << trace.pairSummaries[0].successRate << "\n";
    if (!out.empty()) {
        const fs::path dir = output_dir(out);
        fs::create_directories(dir);
        trace.write_events_jsonl((dir / "sniff_demo_trace.jsonl").string());
        trace.write_summary_json((dir / "sniff_demo_summary.json").string());
    }
    return sn.done ? 0 : 1;
}

int cmd_experiment(const std::string& name, std::uint64_t seed, const std::string& out,
                   int sessions, int trials) {
    uwbsim::harness::ExperimentSpec spec;
    spec.name = name;
    spec.seed = seed;
    if (sessions > 0) spec.sessionsPerPoint = sessions;
    const uwbsim::harness::Csv csv = name == "sniff-time"
                                         ? uwbsim::harness::exp_sniff_time(spec, trials > 0 ? trials : 1000)
                                         : uwbsim::harness::run_experiment(spec);
    const fs::path dir = output_dir(out);
    fs::create_directories(dir);
    std::string fileName = name + ".csv";
    for (auto& c : fileName)
        if (c == '-') c = '_';
    const fs::path path = dir / fileName;
    csv.write(path.string());
    std::cout << csv.to_string();
    std::cerr << "written: " << path.string() << "\n";
    return 0;
}

int cmd_domains() {
    const auto& d = uwbsim::default_domains();
    json j;
    j["channels"] = d.channels;
    j["pacs"] = d.pacs;
    j["preamble_code_indices"] = d.codeIndices;
    j["preamble_lengths"] = d.preambleLengths;
    j["sfd_types"] = d.sfdTypes;
    std::vector<std::string> modes;
    for (auto m : d.stsModes) modes.push_back(uwbsim::to_string(m));
    j["sts_modes"] = modes;
    j["sts_lengths"] = d.stsLengths;
    j["phd_profiles"] = d.phdProfiles;
    j["full_product"] = uwbsim::attack::search_space_size(d);
    j["staged_sum"] = uwbsim::attack::staged_search_size(d);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_report(const std::string& tracePath) {
    std::ifstream in(tracePath);
    if (!in) {
        std::cerr << "cannot open " << tracePath << "\n";
        return 2;
    }
    std::uint64_t events = 0;
    std::map<std::string, std::uint64_t> polls, okResponses;
    std::map<std::string, std::vector<double>> distances;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        ++events;
        const std::string ev = j.value("ev", "");
        if (ev == "emit" && j.value("role", "") == "poll") polls[j.value("pair", "")] += 1;
        if (ev == "rx" && j.value("ok", false) && j.value("src_role", "") == "response") {
            const std::string pair = j.value("src_pair", "");
            if (j.value("node", "") == pair + ".init") okResponses[pair] += 1;
        }
        if (ev == "session" && j.contains("distance_m"))
            distances[j.value("pair", "")].push_back(j["distance_m"].get<double>());
    }
    json out;
    out["events"] = events;
    json pairs = json::array();
    for (const auto& [pair, np] : polls) {
        const std::uint64_t nr = okResponses.count(pair) ? okResponses[pair] : 0;
        json p{{"name", pair},
               {"polls_sent", np},
               {"responses_received", nr},
               {"success_rate", np == 0 ? 0.0 : 1.0 - double(nr) / double(np)}};
        if (distances.count(pair)) {
            double mean = 0;
            for (double d : distances[pair]) mean += d;
            p["mean_distance_m"] = mean / double(distances[pair].size());
        }
        pairs.push_back(p);
    }
    out["pairs"] = pairs;
    std::cout << out.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"HRP UWB two-way-ranging and reactive-jamming simulator"};
    app.require_subcommand(1);

    std::string scenarioPath, out, experimentName, tracePath;
    std::uint64_t seed = 1;
    int sessions = 0, trials = 0;

    auto* sim = app.add_subcommand("simulate", "run a scenario file, write trace + summary");
    sim->add_option("scenario", scenarioPath, "scenario JSON file")->required();
    sim->add_option("--out", out, "output directory");

    auto* sniff = app.add_subcommand("sniff-demo", "full pipeline: sniff, time, jam");
    sniff->add_option("--seed", seed, "random seed");
    sniff->add_option("--out", out, "output directory");

    auto* exp = app.add_subcommand("experiment", "run a named experiment, write CSV");
    exp->add_option("name", experimentName, "experiment name")
        ->required()
        ->check(CLI::IsMember(uwbsim::harness::experiment_names()));
    exp->add_option("--seed", seed, "random seed");
    exp->add_option("--out", out, "output directory");
    exp->add_option("--sessions", sessions, "sessions per sweep point");
    exp->add_option("--trials", trials, "trials (sniff-time)");

    app.add_subcommand("domains", "print parameter domains and search-space sizes");

    auto* report = app.add_subcommand("report", "recompute metrics from a trace JSONL");
    report->add_option("trace", tracePath, "trace.jsonl path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("simulate")) return cmd_simulate(scenarioPath, out);
        if (app.got_subcommand("sniff-demo")) return cmd_sniff_demo(seed, out);
        if (app.got_subcommand("experiment"))
            return cmd_experiment(experimentName, seed, out, sessions, trials);
        if (app.got_subcommand("domains")) return cmd_domains();
        if (app.got_subcommand("report")) return cmd_report(tracePath);
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

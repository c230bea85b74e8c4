// Experiment suite: reproduces the attack-evaluation figures as CSV data.
#pragma once

#include "uwbsim/simcore.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace uwbsim::harness {

struct ExperimentSpec {
    std::string name;
    std::uint64_t seed = 1;
    int sessionsPerPoint = 182;
    int replicates = 7;
    std::string outPath; // CSV destination
    double snrDb = 25.0;

    void validate() const;
};

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string to_string() const;
    void write(const std::string& path) const;
    double cell_as_double(std::size_t row, const std::string& column) const;
};

// Baseline scenario shared by the experiments: initiator at (0,0), responder
// at (rangingDistance,0), attacker at (0,attackDistance); DS-TWR, 800/1600 us,
// 167 ms cadence, SNR per spec.
Scenario baseline_scenario(std::uint64_t seed, double snrDb = 25.0);

// Jam/victim field power ratio -> SYNC amplitude gain, accounting for the
// per-chip densities of the jam SYNC and the target field.
double sync_amplitude_gain_for(double fieldPowerGain, const PacketConfig& victim,
                               const std::string& targetField);

// CIR peak degradation vs Eq. 7 predictor. Columns: gain, predicted_factor,
// measured_factor.
Csv exp_cir_degradation(const ExperimentSpec& spec, const std::vector<double>& gains = {1, 3, 15});

// Success rate per (field, gain). Fields: SYNC, STS, PHD, PAYLOAD.
Csv exp_field_sweep(const ExperimentSpec& spec,
                    const std::vector<std::string>& fields = {"SYNC", "STS", "PHD", "PAYLOAD"},
                    const std::vector<double>& gains = {1, 3, 8, 15, 48, 63});

// Success rate under varying attack delay (us), gains 8 and 15.
Csv exp_delay_sweep(const ExperimentSpec& spec,
                    double delayFromUs = 700, double delayToUs = 900, double stepUs = 10,
                    const std::vector<double>& gains = {8, 15});

// Packets-to-sniff over uniformly random victim configs, with per-stage
// breakdown. Columns: trial, packets_total, stage1..stage4, wall_clock_s_at_6hz.
Csv exp_sniff_time(const ExperimentSpec& spec, int trials = 1000);

// Success rate with the pseudo-random-delay countermeasure enabled.
Csv exp_countermeasure(const ExperimentSpec& spec,
                       const std::vector<double>& jitterBoundsT0 = {0.0, 1.0, 2.0, 4.0},
                       const std::vector<double>& gains = {8, 15, 63});

// Success rate vs ranging distance at fixed attacker distance/gain.
Csv exp_distance(const ExperimentSpec& spec,
                 const std::vector<double>& rangingDistancesM = {0.3, 0.5, 1, 2, 3, 4},
                 double attackDistanceM = 1.0, double gain = 8.0);

// Two victim pairs, attack targeted at one. Columns per pair: completion and
// blocked rates.
Csv exp_selective(const ExperimentSpec& spec);

Csv run_experiment(const ExperimentSpec& spec); // dispatch by name

std::vector<std::string> experiment_names();

} // namespace uwbsim::harness

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "qcbm/circuit.hpp"
#include "qcbm/image.hpp"
#include "qcbm/prob.hpp"
#include "qcbm/train.hpp"

namespace qcbm {

struct ShotCounts {
    int num_qubits = 0;
    std::uint64_t total = 0;
    std::map<std::size_t, std::uint64_t> counts;
};

// Measured and ideal single-qubit zero-probabilities over a qubit subset.
struct MarginalSet {
    std::vector<int> qubits;
    std::vector<double> measured;
    std::vector<double> ideal;
};

// i.i.d. draws from p via inverse CDF with the counter RNG; deterministic
// given the seed.
ShotCounts sample_shots(const ProbabilityVector& p, std::uint64_t shots, std::uint64_t seed);

// P_i = (shots with bit i = 0) / total, for each qubit in S.
std::vector<double> empirical_marginals(const ShotCounts& counts, std::span<const int> qubits);

// Exact P_i from a probability vector.
std::vector<double> exact_marginals(const ProbabilityVector& p, std::span<const int> qubits);

// Sum over S of |P_i - P*_i|.
double l1_marginals(std::span<const double> measured, std::span<const double> ideal);

// L1 of a fully depolarized register (every P_i = 0.5) against the ideal.
double mixed_baseline_l1(std::span<const double> ideal);

// MarginalSet of a completely noisy run: measured 0.5 everywhere.
MarginalSet depolarized_reference(std::span<const double> ideal, std::span<const int> qubits);

// Monte Carlo floor for the mixed-state L1 statistic at finite shots: each
// trial draws `shots` fair bits per qubit, forms the empirical P_i, and
// scores l1_marginals against the ideal. Returns the nearest-rank value that
// the given percentage of trials exceed, i.e. percentile 99 is the level a
// maximally mixed register stays above in 99% of experiments. As shots grow
// every trial concentrates at mixed_baseline_l1.
double finite_shot_percentile(std::span<const double> ideal, std::uint64_t shots, int trials,
                              double percentile, std::uint64_t seed);

// Joint distribution of the k most significant qubits.
ProbabilityVector top_bits_histogram(const ProbabilityVector& p, int k);
ProbabilityVector top_bits_histogram(const ShotCounts& counts, int k);

struct ReadoutConfig {
    double threshold = 0.4;    // stop once |<Z>| reaches this
    int max_iterations = 300;
    double learning_rate = 0.05;
    std::uint64_t seed = 1;
};

struct ReadoutResult {
    ParameterizedCircuit circuit;   // original gates plus one appended layer
    std::vector<double> params;     // original values untouched, new slots trained
    double z_value = 0.0;
    double z_target = 0.0;          // the extreme optimized towards (+1 or -1)
    int iterations_used = 0;
    bool reached = false;
};

// Learns a readout observable for one most-significant qubit of a trained
// block: appends a single rotation+entangler layer and minimizes the mean
// squared error between <Z> and the nearer extreme, optimizing only the new
// parameters. Stops at |<Z>| >= threshold; if the cap is hit first the best
// achieved value is reported with reached = false.
ReadoutResult train_readout(const ParameterizedCircuit& circuit, std::span<const double> params,
                            const GridLayout& layout, int qubit, const ReadoutConfig& config);

// Grouped bar chart of measured vs ideal values in [0, 1], rendered to a
// grayscale raster (ideal bars light, measured dark).
GrayImage render_marginal_chart(const MarginalSet& marginals, int bar_width = 14,
                                int height = 160);

// Bar chart of one series with optional horizontal reference lines, values
// clipped to [0, max value]; used for L1-vs-circuit-size reports.
GrayImage render_value_chart(std::span<const double> values, std::span<const double> reference_lines,
                             int bar_width = 22, int height = 160);

} // namespace qcbm

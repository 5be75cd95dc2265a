#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qcbm {

// Probability mass over n-qubit bitstrings. The index of an outcome is the
// integer whose most significant bit is qubit 0. The pre-normalization total
// is carried separately in norm_constant so converting back to raw data
// (e.g. pixel intensities) stays possible after any number of transforms.
struct ProbabilityVector {
    int num_qubits = 0;
    std::vector<double> mass;
    double norm_constant = 1.0;

    std::size_t size() const { return mass.size(); }
    double total() const;
};

// Clamp applied to model probabilities inside kl_divergence.
inline constexpr double kKlClampEpsilon = 1e-12;

// Integer index of a bitstring, most significant bit first.
std::size_t index_of_bitstring(std::span<const int> bits);

// Marginalize over the n - m least significant qubits (adjacent-bin sums).
ProbabilityVector coarse_grain(const ProbabilityVector& p, int target_qubits);

// Split each outcome's mass equally over 2^(m - n) consecutive finer bins,
// i.e. append m - n uniformly random least significant qubits.
ProbabilityVector expand(const ProbabilityVector& p, int target_qubits);

// Dispatch to expand / coarse_grain / identity depending on target_qubits.
ProbabilityVector at_resolution(const ProbabilityVector& p, int target_qubits);

// KL(target | model) with both sides brought to `resolution` qubits first.
// Terms with target mass 0 contribute 0; the model is clamped below at
// epsilon so true zeros in the target's complement never produce infinities.
double kl_divergence(const ProbabilityVector& target, const ProbabilityVector& model,
                     int resolution, double epsilon = kKlClampEpsilon);

// Total variation distance at the given resolution; 0.5 * sum |p - q|.
double tvd(const ProbabilityVector& p, const ProbabilityVector& q, int resolution);

// Classical fidelity (sum sqrt(p*q))^2 at the given resolution.
double classical_fidelity(const ProbabilityVector& p, const ProbabilityVector& q,
                          int resolution);

} // namespace qcbm

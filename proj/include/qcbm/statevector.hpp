#pragma once

#include <complex>
#include <span>
#include <vector>

#include "qcbm/circuit.hpp"
#include "qcbm/gates.hpp"
#include "qcbm/prob.hpp"

namespace qcbm {

// Default cap on simulated register size (2^24 amplitudes = 256 MB).
inline constexpr int kDefaultMaxQubits = 24;

// Dense n-qubit state. amplitudes[x] is the coefficient of the basis state
// whose bitstring has qubit 0 as the most significant bit of x.
struct Statevector {
    int num_qubits = 0;
    std::vector<std::complex<double>> amplitudes;
};

// Worker threads used inside gate kernels and reductions. Reductions always
// combine a thread-count-determined set of chunk partials in index order, so
// results are deterministic for a fixed thread count. Default 1.
void set_max_threads(int threads);
int max_threads();

Statevector zero_state(int num_qubits, int max_qubits = kDefaultMaxQubits);

void apply_gate(Statevector& state, const Gate& gate, std::span<const double> params = {});

Statevector run_circuit(const ParameterizedCircuit& circuit, std::span<const double> params,
                        int max_qubits = kDefaultMaxQubits);

ProbabilityVector born_distribution(const Statevector& state);

// Probability of reading qubit `qubit` as 0.
double marginal_prob0(const Statevector& state, int qubit);

// <Z> on one qubit; equals 2 * marginal_prob0 - 1.
double z_expectation(const Statevector& state, int qubit);

double norm_squared(const Statevector& state);

} // namespace qcbm

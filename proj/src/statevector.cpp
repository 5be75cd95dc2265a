#include "qcbm/statevector.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "parallel.hpp"

namespace qcbm {

namespace {

std::atomic<int> g_max_threads{1};

using cd = std::complex<double>;

// Qubit 0 is the most significant bit of the amplitude index.
inline std::size_t bit_stride(int num_qubits, int qubit) {
    return std::size_t{1} << (num_qubits - 1 - qubit);
}

inline void check_qubit(const Statevector& state, int qubit) {
    if (qubit < 0 || qubit >= state.num_qubits)
        throw std::out_of_range("gate qubit index out of range");
}

// i0 of the p-th amplitude pair split by `stride`; i1 = i0 | stride.
inline std::size_t pair_index(std::size_t p, std::size_t stride) {
    return ((p & ~(stride - 1)) << 1) | (p & (stride - 1));
}

template <typename PairOp>
void for_each_pair(Statevector& state, int qubit, PairOp op) {
    std::size_t stride = bit_stride(state.num_qubits, qubit);
    cd* amp = state.amplitudes.data();
    detail::parallel_for(state.amplitudes.size() / 2, [=](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            std::size_t i0 = pair_index(p, stride);
            op(amp[i0], amp[i0 | stride]);
        }
    });
}

constexpr double kInvSqrt2 = 0.70710678118654752440;

void apply_h(Statevector& state, int qubit) {
    for_each_pair(state, qubit, [](cd& a, cd& b) {
        cd a0 = a;
        a = (a0 + b) * kInvSqrt2;
        b = (a0 - b) * kInvSqrt2;
    });
}

void apply_x(Statevector& state, int qubit) {
    for_each_pair(state, qubit, [](cd& a, cd& b) { std::swap(a, b); });
}

void apply_ry(Statevector& state, int qubit, double angle) {
    double c = std::cos(angle / 2.0);
    double s = std::sin(angle / 2.0);
    for_each_pair(state, qubit, [=](cd& a, cd& b) {
        cd a0 = a;
        a = c * a0 - s * b;
        b = s * a0 + c * b;
    });
}

void apply_rz(Statevector& state, int qubit, double angle) {
    cd phase0 = std::polar(1.0, -angle / 2.0);
    cd phase1 = std::polar(1.0, angle / 2.0);
    std::size_t stride = bit_stride(state.num_qubits, qubit);
    cd* amp = state.amplitudes.data();
    detail::parallel_for(state.amplitudes.size(), [=](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) amp[i] *= (i & stride) ? phase1 : phase0;
    });
}

void apply_rzz(Statevector& state, int qa, int qb, double angle) {
    cd phase_even = std::polar(1.0, -angle / 2.0);  // bits equal
    cd phase_odd = std::polar(1.0, angle / 2.0);    // bits differ
    std::size_t sa = bit_stride(state.num_qubits, qa);
    std::size_t sb = bit_stride(state.num_qubits, qb);
    cd* amp = state.amplitudes.data();
    detail::parallel_for(state.amplitudes.size(), [=](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            bool odd = static_cast<bool>(i & sa) != static_cast<bool>(i & sb);
            amp[i] *= odd ? phase_odd : phase_even;
        }
    });
}

void apply_cnot(Statevector& state, int control, int target) {
    std::size_t sc = bit_stride(state.num_qubits, control);
    std::size_t st = bit_stride(state.num_qubits, target);
    cd* amp = state.amplitudes.data();
    detail::parallel_for(state.amplitudes.size(), [=](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if ((i & sc) && !(i & st)) std::swap(amp[i], amp[i | st]);
        }
    });
}

} // namespace

void set_max_threads(int threads) { g_max_threads.store(threads < 1 ? 1 : threads); }

int max_threads() { return g_max_threads.load(); }

namespace detail {
int configured_threads() { return g_max_threads.load(); }
} // namespace detail

Statevector zero_state(int num_qubits, int max_qubits) {
    if (num_qubits < 1 || num_qubits > max_qubits)
        throw std::length_error("zero_state: qubit count outside [1, max_qubits]");
    Statevector state;
    state.num_qubits = num_qubits;
    state.amplitudes.assign(std::size_t{1} << num_qubits, cd{0.0, 0.0});
    state.amplitudes[0] = cd{1.0, 0.0};
    return state;
}

void apply_gate(Statevector& state, const Gate& gate, std::span<const double> params) {
    check_qubit(state, gate.qubit0);
    if (is_two_qubit(gate.kind)) {
        check_qubit(state, gate.qubit1);
        if (gate.qubit0 == gate.qubit1)
            throw std::invalid_argument("two-qubit gate needs distinct qubits");
    }
    if (has_angle(gate)) {
        if (gate.param_slot != Gate::kFixedAngle &&
            (gate.param_slot < 0 || static_cast<std::size_t>(gate.param_slot) >= params.size()))
            throw std::out_of_range("gate parameter slot outside the parameter vector");
        if (!std::isfinite(gate_angle(gate, params)))
            throw std::invalid_argument("gate angle is not finite");
    }
    switch (gate.kind) {
        case GateKind::H: apply_h(state, gate.qubit0); break;
        case GateKind::X: apply_x(state, gate.qubit0); break;
        case GateKind::RY: apply_ry(state, gate.qubit0, gate_angle(gate, params)); break;
        case GateKind::RZ: apply_rz(state, gate.qubit0, gate_angle(gate, params)); break;
        case GateKind::RZZ:
            apply_rzz(state, gate.qubit0, gate.qubit1, gate_angle(gate, params));
            break;
        case GateKind::CNOT: apply_cnot(state, gate.qubit0, gate.qubit1); break;
    }
}

Statevector run_circuit(const ParameterizedCircuit& circuit, std::span<const double> params,
                        int max_qubits) {
    if (static_cast<int>(params.size()) != circuit.num_params)
        throw std::invalid_argument("run_circuit: parameter count mismatch");
    Statevector state = zero_state(circuit.num_qubits, max_qubits);
    for (const Gate& gate : circuit.gates) apply_gate(state, gate, params);
    return state;
}

ProbabilityVector born_distribution(const Statevector& state) {
    ProbabilityVector p;
    p.num_qubits = state.num_qubits;
    p.mass.resize(state.amplitudes.size());
    const cd* amp = state.amplitudes.data();
    double* mass = p.mass.data();
    detail::parallel_for(state.amplitudes.size(), [=](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) mass[i] = std::norm(amp[i]);
    });
    return p;
}

double marginal_prob0(const Statevector& state, int qubit) {
    check_qubit(state, qubit);
    std::size_t stride = bit_stride(state.num_qubits, qubit);
    const cd* amp = state.amplitudes.data();
    return detail::parallel_sum<double>(
        state.amplitudes.size(), [=](std::size_t begin, std::size_t end) {
            double sum = 0.0;
            for (std::size_t i = begin; i < end; ++i)
                if (!(i & stride)) sum += std::norm(amp[i]);
            return sum;
        });
}

double z_expectation(const Statevector& state, int qubit) {
    check_qubit(state, qubit);
    std::size_t stride = bit_stride(state.num_qubits, qubit);
    const cd* amp = state.amplitudes.data();
    return detail::parallel_sum<double>(
        state.amplitudes.size(), [=](std::size_t begin, std::size_t end) {
            double sum = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                double w = std::norm(amp[i]);
                sum += (i & stride) ? -w : w;
            }
            return sum;
        });
}

double norm_squared(const Statevector& state) {
    const cd* amp = state.amplitudes.data();
    return detail::parallel_sum<double>(state.amplitudes.size(),
                                        [=](std::size_t begin, std::size_t end) {
                                            double sum = 0.0;
                                            for (std::size_t i = begin; i < end; ++i)
                                                sum += std::norm(amp[i]);
                                            return sum;
                                        });
}

} // namespace qcbm

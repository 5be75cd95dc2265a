#include "qcbm/prob.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qcbm {

double ProbabilityVector::total() const {
    double sum = 0.0;
    for (double m : mass) sum += m;
    return sum;
}

std::size_t index_of_bitstring(std::span<const int> bits) {
    std::size_t x = 0;
    for (int b : bits) {
        if (b != 0 && b != 1) throw std::invalid_argument("bitstring entries must be 0 or 1");
        x = (x << 1) | static_cast<std::size_t>(b);
    }
    return x;
}

ProbabilityVector coarse_grain(const ProbabilityVector& p, int target_qubits) {
    if (target_qubits < 1 || target_qubits > p.num_qubits)
        throw std::invalid_argument("coarse_grain: target resolution out of range");
    // One adjacent-pair pass per dropped qubit. The pairwise structure keeps
    // the expand round trip exact: equal halves re-sum to the original bits.
    std::vector<double> mass = p.mass;
    for (int n = p.num_qubits; n > target_qubits; --n) {
        std::size_t half = mass.size() / 2;
        std::vector<double> next(half);
        for (std::size_t i = 0; i < half; ++i) next[i] = mass[2 * i] + mass[2 * i + 1];
        mass = std::move(next);
    }
    return {target_qubits, std::move(mass), p.norm_constant};
}

ProbabilityVector expand(const ProbabilityVector& p, int target_qubits) {
    if (target_qubits < p.num_qubits)
        throw std::invalid_argument("expand: target resolution below current");
    int extra = target_qubits - p.num_qubits;
    std::size_t split = std::size_t{1} << extra;
    double scale = 1.0 / static_cast<double>(split);
    std::vector<double> mass(p.mass.size() * split);
    for (std::size_t x = 0; x < p.mass.size(); ++x) {
        double piece = p.mass[x] * scale;
        for (std::size_t j = 0; j < split; ++j) mass[x * split + j] = piece;
    }
    return {target_qubits, std::move(mass), p.norm_constant};
}

ProbabilityVector at_resolution(const ProbabilityVector& p, int target_qubits) {
    if (target_qubits < 1) throw std::invalid_argument("at_resolution: resolution must be >= 1");
    if (target_qubits == p.num_qubits) return p;
    return target_qubits > p.num_qubits ? expand(p, target_qubits)
                                        : coarse_grain(p, target_qubits);
}

double kl_divergence(const ProbabilityVector& target, const ProbabilityVector& model,
                     int resolution, double epsilon) {
    ProbabilityVector p = at_resolution(target, resolution);
    ProbabilityVector q = at_resolution(model, resolution);
    double sum = 0.0;
    for (std::size_t x = 0; x < p.mass.size(); ++x) {
        double px = p.mass[x];
        if (px <= 0.0) continue;
        sum += px * std::log(px / std::max(q.mass[x], epsilon));
    }
    return sum;
}

double tvd(const ProbabilityVector& p, const ProbabilityVector& q, int resolution) {
    ProbabilityVector a = at_resolution(p, resolution);
    ProbabilityVector b = at_resolution(q, resolution);
    double sum = 0.0;
    for (std::size_t x = 0; x < a.mass.size(); ++x) sum += std::abs(a.mass[x] - b.mass[x]);
    return 0.5 * sum;
}

double classical_fidelity(const ProbabilityVector& p, const ProbabilityVector& q,
                          int resolution) {
    ProbabilityVector a = at_resolution(p, resolution);
    ProbabilityVector b = at_resolution(q, resolution);
    double overlap = 0.0;
    for (std::size_t x = 0; x < a.mass.size(); ++x)
        overlap += std::sqrt(a.mass[x] * b.mass[x]);
    return overlap * overlap;
}

} // namespace qcbm

#include "qcbm/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "qcbm/rng.hpp"
#include "qcbm/statevector.hpp"

namespace qcbm {

namespace {

inline bool bit_of(std::size_t index, int num_qubits, int qubit) {
    return (index >> (num_qubits - 1 - qubit)) & 1;
}

void check_subset(std::span<const int> qubits, int num_qubits) {
    if (qubits.empty()) throw std::invalid_argument("qubit subset is empty");
    for (int q : qubits)
        if (q < 0 || q >= num_qubits) throw std::out_of_range("qubit subset index out of range");
}

} // namespace

ShotCounts sample_shots(const ProbabilityVector& p, std::uint64_t shots, std::uint64_t seed) {
    if (shots < 1) throw std::invalid_argument("shots must be >= 1");
    std::vector<double> cdf(p.mass.size());
    double running = 0.0;
    for (std::size_t i = 0; i < p.mass.size(); ++i) {
        running += p.mass[i];
        cdf[i] = running;
    }
    ShotCounts counts;
    counts.num_qubits = p.num_qubits;
    counts.total = shots;
    CounterRng rng(seed);
    for (std::uint64_t s = 0; s < shots; ++s) {
        double u = rng.next_double() * running;
        std::size_t idx = static_cast<std::size_t>(
            std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (idx >= cdf.size()) idx = cdf.size() - 1;
        ++counts.counts[idx];
    }
    return counts;
}

std::vector<double> empirical_marginals(const ShotCounts& counts, std::span<const int> qubits) {
    check_subset(qubits, counts.num_qubits);
    std::vector<double> marginals(qubits.size(), 0.0);
    for (const auto& [index, n] : counts.counts) {
        for (std::size_t s = 0; s < qubits.size(); ++s)
            if (!bit_of(index, counts.num_qubits, qubits[s]))
                marginals[s] += static_cast<double>(n);
    }
    for (double& m : marginals) m /= static_cast<double>(counts.total);
    return marginals;
}

std::vector<double> exact_marginals(const ProbabilityVector& p, std::span<const int> qubits) {
    check_subset(qubits, p.num_qubits);
    std::vector<double> marginals(qubits.size(), 0.0);
    for (std::size_t x = 0; x < p.mass.size(); ++x) {
        if (p.mass[x] == 0.0) continue;
        for (std::size_t s = 0; s < qubits.size(); ++s)
            if (!bit_of(x, p.num_qubits, qubits[s])) marginals[s] += p.mass[x];
    }
    return marginals;
}

double l1_marginals(std::span<const double> measured, std::span<const double> ideal) {
    if (measured.size() != ideal.size())
        throw std::invalid_argument("l1_marginals: mismatched marginal sets");
    double sum = 0.0;
    for (std::size_t i = 0; i < measured.size(); ++i) sum += std::abs(measured[i] - ideal[i]);
    return sum;
}

double mixed_baseline_l1(std::span<const double> ideal) {
    double sum = 0.0;
    for (double p : ideal) sum += std::abs(0.5 - p);
    return sum;
}

MarginalSet depolarized_reference(std::span<const double> ideal, std::span<const int> qubits) {
    MarginalSet set;
    set.qubits.assign(qubits.begin(), qubits.end());
    set.ideal.assign(ideal.begin(), ideal.end());
    set.measured.assign(ideal.size(), 0.5);
    return set;
}

double finite_shot_percentile(std::span<const double> ideal, std::uint64_t shots, int trials,
                              double percentile, std::uint64_t seed) {
    if (percentile <= 0.0 || percentile > 100.0)
        throw std::invalid_argument("percentile must be in (0, 100]");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    std::vector<double> values(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        // Per-trial derived stream keeps trials independent of evaluation
        // order. Fair bits come 64 at a time via popcount.
        CounterRng rng(seed ^ static_cast<std::uint64_t>(t));
        double l1 = 0.0;
        for (double p_star : ideal) {
            std::uint64_t zeros = 0;
            std::uint64_t remaining = shots;
            while (remaining >= 64) {
                zeros += static_cast<std::uint64_t>(std::popcount(rng.next_u64()));
                remaining -= 64;
            }
            if (remaining > 0)
                zeros += static_cast<std::uint64_t>(
                    std::popcount(rng.next_u64() >> (64 - remaining)));
            double p_hat = static_cast<double>(zeros) / static_cast<double>(shots);
            l1 += std::abs(p_hat - p_star);
        }
        values[static_cast<std::size_t>(t)] = l1;
    }
    std::sort(values.begin(), values.end());
    // Nearest-rank value that `percentile`% of the trials exceed: rank from
    // the low end at the complementary fraction.
    double fraction = (100.0 - percentile) / 100.0;
    std::size_t rank = static_cast<std::size_t>(std::ceil(fraction * trials));
    if (rank < 1) rank = 1;
    return values[rank - 1];
}

ProbabilityVector top_bits_histogram(const ProbabilityVector& p, int k) {
    if (k > p.num_qubits) throw std::invalid_argument("top_bits_histogram: k exceeds qubits");
    return coarse_grain(p, k);
}

ProbabilityVector top_bits_histogram(const ShotCounts& counts, int k) {
    if (k < 1 || k > counts.num_qubits)
        throw std::invalid_argument("top_bits_histogram: k out of range");
    ProbabilityVector p;
    p.num_qubits = k;
    p.norm_constant = static_cast<double>(counts.total);
    p.mass.assign(std::size_t{1} << k, 0.0);
    int dropped = counts.num_qubits - k;
    for (const auto& [index, n] : counts.counts)
        p.mass[index >> dropped] += static_cast<double>(n) / static_cast<double>(counts.total);
    return p;
}

ReadoutResult train_readout(const ParameterizedCircuit& circuit, std::span<const double> params,
                            const GridLayout& layout, int qubit, const ReadoutConfig& config) {
    if (qubit != layout.vertical_qubit(0) && qubit != layout.horizontal_qubit(0))
        throw std::invalid_argument("readout qubit must be a most-significant qubit");
    if (circuit.num_qubits != layout.num_qubits())
        throw std::invalid_argument("circuit does not match layout");

    ReadoutResult result;
    result.circuit = circuit;
    int base = circuit.num_params;
    for (int q : layout.active_qubits(layout.columns())) {
        result.circuit.gates.push_back(Gate::ry(q, result.circuit.num_params++));
        result.circuit.gates.push_back(Gate::rz(q, result.circuit.num_params++));
    }
    for (auto [a, b] : layout.active_edges(layout.columns()))
        result.circuit.gates.push_back(Gate::rzz(a, b, result.circuit.num_params++));

    result.params.assign(params.begin(), params.end());
    result.params.resize(static_cast<std::size_t>(result.circuit.num_params), 0.0);

    double z = z_expectation(run_circuit(result.circuit, result.params), qubit);
    result.z_target = z >= 0.0 ? 1.0 : -1.0;
    result.z_value = z;
    result.reached = std::abs(z) >= config.threshold;
    if (result.reached) return result;

    TrainConfig adam_config;
    adam_config.learning_rate = config.learning_rate;
    AdamState adam;
    std::vector<double> current = result.params;
    double best_abs_z = std::abs(z);
    for (int it = 0; it < config.max_iterations; ++it) {
        double z_now = 0.0;
        std::vector<double> grad =
            z_mse_gradient(result.circuit, current, qubit, result.z_target, nullptr, &z_now);
        if (std::abs(z_now) > best_abs_z) {
            best_abs_z = std::abs(z_now);
            result.params = current;
            result.z_value = z_now;
        }
        if (std::abs(z_now) >= config.threshold) {
            result.reached = true;
            result.iterations_used = it;
            return result;
        }
        std::fill(grad.begin(), grad.begin() + base, 0.0);  // original slots stay frozen
        adam_step(current, grad, adam, adam_config);
        result.iterations_used = it + 1;
    }
    double z_final = z_expectation(run_circuit(result.circuit, current), qubit);
    if (std::abs(z_final) > best_abs_z) {
        result.params = current;
        result.z_value = z_final;
    }
    result.reached = std::abs(result.z_value) >= config.threshold;
    return result;
}

namespace {

void draw_bar(GrayImage& canvas, int x0, int width, double value, double shade, int plot_height) {
    int bar = static_cast<int>(std::lround(std::clamp(value, 0.0, 1.0) * (plot_height - 1)));
    for (int y = 0; y < bar; ++y)
        for (int x = x0; x < x0 + width; ++x)
            canvas.at(canvas.height - 2 - y, x) = shade;
}

} // namespace

GrayImage render_marginal_chart(const MarginalSet& marginals, int bar_width, int height) {
    int groups = static_cast<int>(marginals.qubits.size());
    int group_width = 2 * bar_width + 6;
    GrayImage canvas = GrayImage::filled(height, groups * group_width + 8, 1.0);
    int plot_height = height - 4;
    for (int g = 0; g < groups; ++g) {
        int x0 = 4 + g * group_width;
        draw_bar(canvas, x0, bar_width, marginals.ideal[static_cast<std::size_t>(g)], 0.7,
                 plot_height);
        draw_bar(canvas, x0 + bar_width + 2, bar_width,
                 marginals.measured[static_cast<std::size_t>(g)], 0.2, plot_height);
    }
    for (int x = 0; x < canvas.width; ++x) canvas.at(canvas.height - 1, x) = 0.0;
    return canvas;
}

GrayImage render_value_chart(std::span<const double> values,
                             std::span<const double> reference_lines, int bar_width, int height) {
    double peak = 1e-12;
    for (double v : values) peak = std::max(peak, v);
    for (double v : reference_lines) peak = std::max(peak, v);
    int bars = static_cast<int>(values.size());
    GrayImage canvas = GrayImage::filled(height, bars * (bar_width + 6) + 10, 1.0);
    int plot_height = height - 4;
    for (int i = 0; i < bars; ++i)
        draw_bar(canvas, 5 + i * (bar_width + 6), bar_width,
                 values[static_cast<std::size_t>(i)] / peak, 0.25, plot_height);
    for (double line : reference_lines) {
        int y = canvas.height - 2 -
                static_cast<int>(std::lround(line / peak * (plot_height - 1)));
        if (y < 0) y = 0;
        for (int x = 0; x < canvas.width; ++x) canvas.at(y, x) = 0.5;
    }
    for (int x = 0; x < canvas.width; ++x) canvas.at(canvas.height - 1, x) = 0.0;
    return canvas;
}

} // namespace qcbm

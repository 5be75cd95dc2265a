#include "qcbm/train.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "parallel.hpp"
#include "qcbm/rng.hpp"

namespace qcbm {

namespace {

using cd = std::complex<double>;

inline std::size_t bit_stride(int num_qubits, int qubit) {
    return std::size_t{1} << (num_qubits - 1 - qubit);
}

void apply_gate_inverse(Statevector& state, const Gate& gate, std::span<const double> params) {
    if (has_angle(gate)) {
        Gate inverse = gate;
        inverse.param_slot = Gate::kFixedAngle;
        inverse.fixed_angle = -gate_angle(gate, params);
        apply_gate(state, inverse);
    } else {
        apply_gate(state, gate, params);  // H, X, CNOT are self-inverse
    }
}

// <mu| G |phi> for the rotation generator G of `gate` (Y, Z or Z(x)Z). The
// parameter-shift relation dU/dt = -i/2 G U turns the loss derivative into
// Im of this overlap.
cd generator_overlap(const Statevector& mu, const Statevector& phi, const Gate& gate) {
    const cd* m = mu.amplitudes.data();
    const cd* f = phi.amplitudes.data();
    std::size_t size = phi.amplitudes.size();
    switch (gate.kind) {
        case GateKind::RY: {
            std::size_t stride = bit_stride(phi.num_qubits, gate.qubit0);
            return detail::parallel_sum<cd>(size / 2, [=](std::size_t begin, std::size_t end) {
                cd sum{0.0, 0.0};
                const cd i_unit{0.0, 1.0};
                for (std::size_t p = begin; p < end; ++p) {
                    std::size_t i0 = ((p & ~(stride - 1)) << 1) | (p & (stride - 1));
                    std::size_t i1 = i0 | stride;
                    sum += std::conj(m[i0]) * (-i_unit * f[i1]) + std::conj(m[i1]) * (i_unit * f[i0]);
                }
                return sum;
            });
        }
        case GateKind::RZ: {
            std::size_t stride = bit_stride(phi.num_qubits, gate.qubit0);
            return detail::parallel_sum<cd>(size, [=](std::size_t begin, std::size_t end) {
                cd sum{0.0, 0.0};
                for (std::size_t i = begin; i < end; ++i) {
                    cd term = std::conj(m[i]) * f[i];
                    sum += (i & stride) ? -term : term;
                }
                return sum;
            });
        }
        case GateKind::RZZ: {
            std::size_t sa = bit_stride(phi.num_qubits, gate.qubit0);
            std::size_t sb = bit_stride(phi.num_qubits, gate.qubit1);
            return detail::parallel_sum<cd>(size, [=](std::size_t begin, std::size_t end) {
                cd sum{0.0, 0.0};
                for (std::size_t i = begin; i < end; ++i) {
                    cd term = std::conj(m[i]) * f[i];
                    bool odd = static_cast<bool>(i & sa) != static_cast<bool>(i & sb);
                    sum += odd ? -term : term;
                }
                return sum;
            });
        }
        default: throw std::logic_error("generator_overlap on a fixed gate");
    }
}

// Reverse sweep shared by every differentiable cost. `costate` holds the
// conjugated cost gradient lambda(x) = conj(dL/dpsi(x)) of the final state;
// the sweep rolls the state and the costate back through the circuit,
// accumulating dL/dtheta_slot = Im <mu_k| G_k |phi_k> per parameterized gate
// (the 1/2 of the generator and the 2 of the real part cancel).
std::vector<double> adjoint_sweep(const ParameterizedCircuit& circuit,
                                  std::span<const double> params, Statevector phi,
                                  std::vector<cd> costate) {
    std::vector<double> grad(static_cast<std::size_t>(circuit.num_params), 0.0);
    int lowest_param_gate = -1;
    for (std::size_t g = 0; g < circuit.gates.size(); ++g) {
        if (circuit.gates[g].param_slot != Gate::kFixedAngle) {
            lowest_param_gate = static_cast<int>(g);
            break;
        }
    }
    if (lowest_param_gate < 0) return grad;

    Statevector mu{circuit.num_qubits, std::move(costate)};
    for (int g = static_cast<int>(circuit.gates.size()) - 1; g >= lowest_param_gate; --g) {
        const Gate& gate = circuit.gates[static_cast<std::size_t>(g)];
        if (gate.param_slot != Gate::kFixedAngle)
            grad[static_cast<std::size_t>(gate.param_slot)] +=
                std::imag(generator_overlap(mu, phi, gate));
        if (g == lowest_param_gate) break;
        apply_gate_inverse(phi, gate, params);
        apply_gate_inverse(mu, gate, params);
    }
    return grad;
}

struct KlEvaluation {
    double loss = 0.0;
    std::vector<double> grad;
    ProbabilityVector model;
};

// Loss, exact gradient and the model distribution in one forward + one
// backward pass. Outcomes where the clamp is active (model mass <= epsilon)
// contribute a locally constant loss term, so their costate entries are zero
// and the gradient matches finite differences of the clamped loss.
KlEvaluation evaluate_kl(const ParameterizedCircuit& circuit, std::span<const double> params,
                         const ProbabilityVector& target, double epsilon, bool with_gradient,
                         int max_qubits) {
    if (target.num_qubits != circuit.num_qubits)
        throw std::invalid_argument("target resolution does not match circuit qubit count");
    Statevector psi = run_circuit(circuit, params, max_qubits);
    KlEvaluation eval;
    eval.model = born_distribution(psi);
    double loss = 0.0;
    std::vector<cd> costate;
    if (with_gradient) costate.assign(psi.amplitudes.size(), cd{0.0, 0.0});
    for (std::size_t x = 0; x < eval.model.mass.size(); ++x) {
        double px = target.mass[x];
        if (px <= 0.0) continue;
        double qx = eval.model.mass[x];
        loss += px * std::log(px / std::max(qx, epsilon));
        if (with_gradient && qx > epsilon)
            costate[x] = -(px / qx) * psi.amplitudes[x];
    }
    eval.loss = loss;
    if (with_gradient)
        eval.grad = adjoint_sweep(circuit, params, std::move(psi), std::move(costate));
    return eval;
}

// Costate of (<Z> - target)^2: dL/dpsi(x) = 2 (<Z> - t) sign(x) psi*(x).
std::vector<cd> z_costate(const Statevector& psi, int qubit, double z_target,
                          double* loss_out, double* z_out) {
    double z = z_expectation(psi, qubit);
    if (z_out) *z_out = z;
    if (loss_out) *loss_out = (z - z_target) * (z - z_target);
    std::size_t stride = bit_stride(psi.num_qubits, qubit);
    std::vector<cd> costate(psi.amplitudes.size());
    double scale = 2.0 * (z - z_target);
    for (std::size_t i = 0; i < costate.size(); ++i) {
        double sign = (i & stride) ? -1.0 : 1.0;
        costate[i] = scale * sign * psi.amplitudes[i];
    }
    return costate;
}

int stage_qubits(const GridLayout& layout, int columns) {
    return static_cast<int>(layout.active_qubits(columns).size());
}

// Stage circuits are built with global qubit labels so gate lists nest
// across stages; simulation happens on a compact register holding only the
// active qubits, in the same significance order per axis.
ParameterizedCircuit compact_stage_circuit(const ParameterizedCircuit& circuit,
                                           const GridLayout& layout, int columns) {
    int active_v = std::min(columns, layout.vertical_qubits);
    int active_h = std::min(columns, layout.horizontal_qubits);
    auto remap = [&](int q) {
        if (q < layout.vertical_qubits) {
            if (q >= active_v) throw std::logic_error("stage gate on inactive qubit");
            return q;
        }
        int h = q - layout.vertical_qubits;
        if (h >= active_h) throw std::logic_error("stage gate on inactive qubit");
        return active_v + h;
    };
    ParameterizedCircuit compact;
    compact.num_qubits = active_v + active_h;
    compact.num_params = circuit.num_params;
    compact.gates.reserve(circuit.gates.size());
    for (Gate g : circuit.gates) {
        g.qubit0 = remap(g.qubit0);
        if (is_two_qubit(g.kind)) g.qubit1 = remap(g.qubit1);
        compact.gates.push_back(g);
    }
    return compact;
}

} // namespace

void adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state,
               const TrainConfig& config) {
    if (grad.size() != params.size()) throw std::invalid_argument("adam_step: size mismatch");
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
        state.step = 0;
    }
    ++state.step;
    double bias1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
    double bias2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = config.adam_beta1 * state.m[i] + (1.0 - config.adam_beta1) * grad[i];
        state.v[i] = config.adam_beta2 * state.v[i] + (1.0 - config.adam_beta2) * grad[i] * grad[i];
        double m_hat = state.m[i] / bias1;
        double v_hat = state.v[i] / bias2;
        params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
    }
}

double kl_loss(const ParameterizedCircuit& circuit, std::span<const double> params,
               const ProbabilityVector& target, double epsilon) {
    return evaluate_kl(circuit, params, target, epsilon, false, kDefaultMaxQubits).loss;
}

std::vector<double> kl_gradient(const ParameterizedCircuit& circuit,
                                std::span<const double> params, const ProbabilityVector& target,
                                double epsilon) {
    return evaluate_kl(circuit, params, target, epsilon, true, kDefaultMaxQubits).grad;
}

std::vector<double> z_mse_gradient(const ParameterizedCircuit& circuit,
                                   std::span<const double> params, int qubit, double z_target,
                                   double* loss_out, double* z_out) {
    Statevector psi = run_circuit(circuit, params);
    std::vector<cd> costate = z_costate(psi, qubit, z_target, loss_out, z_out);
    return adjoint_sweep(circuit, params, std::move(psi), std::move(costate));
}

TrainResult train_stage(const ParameterizedCircuit& circuit, std::span<const double> initial,
                        const ProbabilityVector& target, const TrainConfig& config,
                        int iterations, const IterationCallback& callback) {
    if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    TrainResult result;
    std::vector<double> params(initial.begin(), initial.end());
    result.best_params = params;
    result.best_loss = std::numeric_limits<double>::infinity();
    AdamState adam;
    for (int it = 0; it <= iterations; ++it) {
        bool last = it == iterations;
        KlEvaluation eval =
            evaluate_kl(circuit, params, target, config.kl_epsilon, !last, config.max_qubits);
        result.loss_trace.push_back(eval.loss);
        if (callback) callback(it, eval.loss, eval.model);
        if (eval.loss < result.best_loss) {
            result.best_loss = eval.loss;
            result.best_params = params;
        }
        if (!last) adam_step(params, eval.grad, adam, config);
    }
    return result;
}

std::vector<int> proportional_iterations(const GridLayout& layout,
                                         std::span<const HierarchyStage> stages, int total) {
    std::vector<double> weights;
    double sum = 0.0;
    for (const HierarchyStage& stage : stages) {
        double w = std::ldexp(1.0, stage_qubits(layout, stage.active_columns));
        weights.push_back(w);
        sum += w;
    }
    std::vector<int> iters(stages.size(), 1);
    int assigned = 0;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        iters[s] = std::max(1, static_cast<int>(std::floor(total * weights[s] / sum)));
        assigned += iters[s];
    }
    if (assigned < total && !iters.empty()) iters.back() += total - assigned;
    return iters;
}

HierarchySchedule instantiate_schedule(const GridLayout& layout, const ScheduleTemplate& tmpl) {
    HierarchySchedule schedule = HierarchySchedule::uniform(layout, tmpl.layers_per_stage, 1);
    std::vector<int> iters =
        proportional_iterations(layout, schedule.stages, tmpl.total_iterations);
    for (std::size_t s = 0; s < schedule.stages.size(); ++s)
        schedule.stages[s].iterations = iters[s];
    return schedule;
}

HierarchicalResult hierarchical_train(const GrayImage& image, const GridLayout& layout,
                                      const HierarchySchedule& schedule,
                                      const TrainConfig& config) {
    schedule.validate(layout);
    int j = layout.vertical_qubits;
    int k = layout.horizontal_qubits;
    if (row_qubits(image) != j || col_qubits(image) != k)
        throw std::invalid_argument("image dimensions do not match grid layout");
    if (schedule.stages.back().active_columns != layout.columns())
        throw std::invalid_argument("final stage must cover all qubits");

    ProbabilityVector full_target = image_to_distribution(image);
    HierarchicalResult result;
    result.layout = layout;
    ParameterizedCircuit prev_circuit;
    prev_circuit.num_qubits = layout.num_qubits();
    std::vector<double> prev_params;
    bool randomized = false;

    int s = 0;
    try {
        for (; s < static_cast<int>(schedule.stages.size()); ++s) {
            const HierarchyStage& stage = schedule.stages[static_cast<std::size_t>(s)];
            auto t0 = std::chrono::steady_clock::now();
            ParameterizedCircuit global = build_stage_circuit(layout, schedule, s);
            std::vector<double> params0 = lift_parameters(prev_params, prev_circuit, global);
            if (!randomized && global.num_params > 0) {
                int first_layer = first_layer_param_count(layout, schedule);
                CounterRng rng(config.seed);
                for (int i = 0; i < first_layer; ++i)
                    params0[static_cast<std::size_t>(i)] = rng.next_double() * 2.0 * std::numbers::pi;
                randomized = true;
            }

            int active_v = std::min(stage.active_columns, j);
            int active_h = std::min(stage.active_columns, k);
            ParameterizedCircuit compact = compact_stage_circuit(global, layout, stage.active_columns);
            GrayImage pooled = downsample(image, 1 << (j - active_v), 1 << (k - active_h));
            ProbabilityVector target = image_to_distribution(pooled);

            StageReport report;
            report.stage = s;
            report.active_qubits = compact.num_qubits;
            report.layers = stage.layers;
            report.iterations = stage.iterations;
            auto record = [&](int, double loss, const ProbabilityVector& model) {
                report.kl_trace.push_back(loss);
                ProbabilityVector at_full = expand_distribution_axes(model, active_v, active_h, j, k);
                report.tvd_full_trace.push_back(tvd(full_target, at_full, layout.num_qubits()));
            };
            TrainResult trained =
                train_stage(compact, params0, target, config, stage.iterations, record);
            report.final_kl = trained.best_loss;
            ProbabilityVector best_model =
                born_distribution(run_circuit(compact, trained.best_params, config.max_qubits));
            report.tvd_full = tvd(full_target,
                                  expand_distribution_axes(best_model, active_v, active_h, j, k),
                                  layout.num_qubits());
            report.best_params = trained.best_params;
            report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            result.reports.push_back(std::move(report));

            prev_params = std::move(trained.best_params);
            prev_circuit = std::move(global);
        }
    } catch (const std::exception& e) {
        throw std::runtime_error("stage " + std::to_string(s) + ": " + e.what());
    }

    result.circuit = std::move(prev_circuit);
    result.params = std::move(prev_params);
    return result;
}

HierarchicalResult train_flat(const GrayImage& image, const GridLayout& layout, int layers,
                              int iterations, const TrainConfig& config) {
    HierarchySchedule schedule = HierarchySchedule::single_stage(layout, layers, iterations);
    return hierarchical_train(image, layout, schedule, config);
}

BaeResult train_bae(const GrayImage& image, int b, const ScheduleTemplate& tmpl,
                    const TrainConfig& config, int parallel) {
    BaeResult result;
    result.block_param = b;
    result.decomposition = partition_blocks(image, b);
    int num_blocks = result.decomposition.num_blocks();
    result.blocks.resize(static_cast<std::size_t>(num_blocks));

    auto train_block = [&](int id) {
        BlockTrainResult& block = result.blocks[static_cast<std::size_t>(id)];
        block.block_id = id;
        block.tile_row = id / result.decomposition.tile_cols;
        block.tile_col = id % result.decomposition.tile_cols;
        block.norm = result.decomposition.norms[static_cast<std::size_t>(id)];
        if (block.norm <= 0.0) return;  // empty tile, nothing to load
        try {
            const GrayImage& tile = result.decomposition.blocks[static_cast<std::size_t>(id)];
            GridLayout layout = GridLayout::from_axis_qubits(row_qubits(tile), col_qubits(tile));
            HierarchySchedule schedule = instantiate_schedule(layout, tmpl);
            TrainConfig block_config = config;
            block_config.seed = CounterRng::derive_seed(config.seed, static_cast<std::uint64_t>(id));
            HierarchicalResult trained = hierarchical_train(tile, layout, schedule, block_config);
            block.circuit = std::move(trained.circuit);
            block.params = std::move(trained.params);
            block.final_kl = trained.reports.back().final_kl;
            block.layout = layout;
        } catch (const std::exception& e) {
            block.error = e.what();
        }
    };

    if (parallel <= 1 || num_blocks <= 1) {
        for (int id = 0; id < num_blocks; ++id) train_block(id);
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int id = next.fetch_add(1); id < num_blocks; id = next.fetch_add(1))
                train_block(id);
        };
        std::vector<std::thread> pool;
        int workers = std::min(parallel, num_blocks);
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Assemble with each block's own norm; failed or empty blocks stay black.
    std::vector<ProbabilityVector> distributions;
    distributions.reserve(static_cast<std::size_t>(num_blocks));
    for (int id = 0; id < num_blocks; ++id) {
        const BlockTrainResult& block = result.blocks[static_cast<std::size_t>(id)];
        int tile_qubits =
            row_qubits(result.decomposition.blocks[static_cast<std::size_t>(id)]) +
            col_qubits(result.decomposition.blocks[static_cast<std::size_t>(id)]);
        if (block.ok() && block.norm > 0.0) {
            distributions.push_back(
                born_distribution(run_circuit(block.circuit, block.params, config.max_qubits)));
            result.total_params += block.circuit.num_params;
        } else {
            ProbabilityVector zero;
            zero.num_qubits = tile_qubits;
            zero.mass.assign(std::size_t{1} << tile_qubits, 0.0);
            distributions.push_back(std::move(zero));
        }
    }
    result.reconstruction = assemble_blocks(result.decomposition, distributions);

    ProbabilityVector target = image_to_distribution(image);
    ProbabilityVector model;
    model.num_qubits = target.num_qubits;
    model.norm_constant = target.norm_constant;
    model.mass.resize(target.mass.size());
    double inv_total = 1.0 / target.norm_constant;
    for (std::size_t i = 0; i < model.mass.size(); ++i)
        model.mass[i] = result.reconstruction.intensity[i] * inv_total;
    result.assembled_tvd = tvd(target, model, target.num_qubits);
    return result;
}

} // namespace qcbm

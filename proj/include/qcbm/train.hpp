#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qcbm/circuit.hpp"
#include "qcbm/image.hpp"
#include "qcbm/prob.hpp"
#include "qcbm/statevector.hpp"

namespace qcbm {

struct TrainConfig {
    double learning_rate = 0.01;
    int iterations = 200;          // per stage, unless the schedule overrides
    std::uint64_t seed = 1;
    double kl_epsilon = 1e-12;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int max_qubits = kDefaultMaxQubits;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
};

// One Adam update with bias correction; deterministic.
void adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state,
               const TrainConfig& config);

// KL(target | Born distribution of the circuit) at the circuit's native
// resolution.
double kl_loss(const ParameterizedCircuit& circuit, std::span<const double> params,
               const ProbabilityVector& target, double epsilon = kKlClampEpsilon);

// Exact gradient of kl_loss via one forward and one backward statevector
// sweep (adjoint differentiation): cost O(#gates * 2^n), memory O(2^n).
std::vector<double> kl_gradient(const ParameterizedCircuit& circuit,
                                std::span<const double> params, const ProbabilityVector& target,
                                double epsilon = kKlClampEpsilon);

// Gradient of (<Z on qubit> - z_target)^2 over the circuit parameters, same
// adjoint machinery. Used by readout-observable training.
std::vector<double> z_mse_gradient(const ParameterizedCircuit& circuit,
                                   std::span<const double> params, int qubit, double z_target,
                                   double* loss_out = nullptr, double* z_out = nullptr);

struct TrainResult {
    std::vector<double> best_params;
    double best_loss = 0.0;
    std::vector<double> loss_trace;  // loss before each update, plus the final loss
};

using IterationCallback =
    std::function<void(int iteration, double loss, const ProbabilityVector& model)>;

// Runs `iterations` Adam steps on the KL loss and returns the best-loss
// parameters seen (including the post-final-update point).
TrainResult train_stage(const ParameterizedCircuit& circuit, std::span<const double> initial,
                        const ProbabilityVector& target, const TrainConfig& config,
                        int iterations, const IterationCallback& callback = {});

struct StageReport {
    int stage = 0;
    int active_qubits = 0;
    int layers = 0;
    int iterations = 0;
    double final_kl = 0.0;             // best KL at the stage's own resolution
    double tvd_full = 0.0;             // TVD at full resolution, best parameters
    std::vector<double> kl_trace;
    std::vector<double> tvd_full_trace;
    std::vector<double> best_params;   // best parameters seen in this stage
    double seconds = 0.0;
};

struct HierarchicalResult {
    std::vector<StageReport> reports;
    ParameterizedCircuit circuit;   // full-register circuit of the last stage
    std::vector<double> params;     // best parameters of the last stage
    GridLayout layout;
};

// Staged training: per stage, extend the circuit, warm-start via
// lift_parameters, pool the image to the stage's per-axis resolution, and
// train only the active-qubit register. Initial randomization happens once,
// on the first layer of the first stage. The final stage covers all qubits.
HierarchicalResult hierarchical_train(const GrayImage& image, const GridLayout& layout,
                                      const HierarchySchedule& schedule,
                                      const TrainConfig& config);

// One-shot training of the full circuit (a single-stage schedule), same
// initialization rule and budgets.
HierarchicalResult train_flat(const GrayImage& image, const GridLayout& layout, int layers,
                              int iterations, const TrainConfig& config);

// Schedule recipe applied to each block's own grid in block-amplitude runs.
struct ScheduleTemplate {
    int layers_per_stage = 2;
    int total_iterations = 400;      // split across stages proportional to 2^n_s
};

// Default stage iteration split: proportional to 2^(active qubits), at least
// one iteration per stage, remainder on the last stage.
std::vector<int> proportional_iterations(const GridLayout& layout,
                                         std::span<const HierarchyStage> stages, int total);

HierarchySchedule instantiate_schedule(const GridLayout& layout, const ScheduleTemplate& tmpl);

struct BlockTrainResult {
    int block_id = 0;
    int tile_row = 0;
    int tile_col = 0;
    double norm = 0.0;
    ParameterizedCircuit circuit;
    std::vector<double> params;
    double final_kl = 0.0;
    GridLayout layout;
    std::string error;  // non-empty if this block failed; others still complete

    bool ok() const { return error.empty(); }
};

struct BaeResult {
    int block_param = 0;
    BlockDecomposition decomposition;
    std::vector<BlockTrainResult> blocks;
    GrayImage reconstruction;
    double assembled_tvd = 0.0;  // full-resolution TVD of the assembled image
    int total_params = 0;
};

// Trains every block independently (hierarchically) on its own normalized
// distribution; blocks run on `parallel` threads with per-block derived
// seeds, so results are independent of scheduling order.
BaeResult train_bae(const GrayImage& image, int b, const ScheduleTemplate& tmpl,
                    const TrainConfig& config, int parallel = 1);

} // namespace qcbm

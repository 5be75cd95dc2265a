#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qcbm/rng.hpp"
#include "qcbm/train.hpp"

using namespace qcbm;

namespace {

// Random stage-style circuit for gradient checks: a grown grid ansatz with
// the hierarchy's own gate pattern.
std::pair<ParameterizedCircuit, std::vector<double>> random_ansatz(int total_qubits, int stage,
                                                                   CounterRng& rng) {
    GridLayout layout = GridLayout::from_total_qubits(total_qubits);
    HierarchySchedule schedule = HierarchySchedule::uniform(layout, 2, 1);
    int last = std::min<int>(stage, static_cast<int>(schedule.stages.size()) - 1);
    ParameterizedCircuit circuit = build_stage_circuit(layout, schedule, last);
    // Compact to the active register so the target matches.
    ParameterizedCircuit compact;
    compact.num_qubits = total_qubits;
    compact.num_params = circuit.num_params;
    compact.gates = circuit.gates;
    std::vector<double> params(static_cast<std::size_t>(circuit.num_params));
    for (double& p : params) p = (rng.next_double() * 2 - 1) * 3.0;
    return {std::move(compact), std::move(params)};
}

bool gradient_matches(std::span<const double> grad, std::span<const double> reference,
                      double rel_tol, double zero_tol = 1e-7) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
        double scale = std::max(std::abs(grad[i]), std::abs(reference[i]));
        if (scale < zero_tol) continue;  // both numerically zero
        if (std::abs(grad[i] - reference[i]) > rel_tol * scale) return false;
    }
    return true;
}

} // namespace

TEST_CASE("adam: zero gradient leaves parameters in place") {
    TrainConfig config;
    AdamState state;
    std::vector<double> params{0.5, -0.25};
    std::vector<double> zero{0.0, 0.0};
    adam_step(params, zero, state, config);
    CHECK(params == std::vector<double>{0.5, -0.25});
    CHECK(state.step == 1);
}

TEST_CASE("adam: constant gradient walks parameters downhill monotonically") {
    TrainConfig config;
    AdamState state;
    std::vector<double> params{1.0};
    std::vector<double> grad{2.5};
    double prev = params[0];
    for (int t = 0; t < 25; ++t) {
        adam_step(params, grad, state, config);
        CHECK(params[0] < prev);
        prev = params[0];
    }
}

TEST_CASE("adam matches a hand-rolled reference trace on a quadratic") {
    TrainConfig config;
    config.learning_rate = 0.05;
    AdamState state;
    std::vector<double> params{1.0, -2.0};

    double rm[2] = {0, 0}, rv[2] = {0, 0}, ref[2] = {1.0, -2.0};
    for (int t = 1; t <= 10; ++t) {
        // gradient of f(x) = 0.5*(x0^2 + 3 x1^2)
        std::vector<double> grad{params[0], 3.0 * params[1]};
        double rgrad[2] = {ref[0], 3.0 * ref[1]};
        adam_step(params, grad, state, config);
        for (int i = 0; i < 2; ++i) {
            rm[i] = 0.9 * rm[i] + 0.1 * rgrad[i];
            rv[i] = 0.999 * rv[i] + 0.001 * rgrad[i] * rgrad[i];
            double mh = rm[i] / (1 - std::pow(0.9, t));
            double vh = rv[i] / (1 - std::pow(0.999, t));
            ref[i] -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
        }
        CHECK(params[0] == doctest::Approx(ref[0]).epsilon(1e-12));
        CHECK(params[1] == doctest::Approx(ref[1]).epsilon(1e-12));
    }
}

TEST_CASE("kl_loss is zero when the circuit reproduces the target") {
    ParameterizedCircuit circuit;
    circuit.num_qubits = 2;
    circuit.gates = {Gate::h(0), Gate::h(1), Gate::ry(0, 0), Gate::rz(1, 1)};
    circuit.num_params = 2;
    std::vector<double> zeros{0.0, 0.0};
    ProbabilityVector uniform{2, {0.25, 0.25, 0.25, 0.25}, 1.0};
    CHECK(kl_loss(circuit, zeros, uniform) == doctest::Approx(0.0).epsilon(1e-9));

    ProbabilityVector wrong_size{1, {0.5, 0.5}, 1.0};
    CHECK_THROWS_AS((void)kl_loss(circuit, zeros, wrong_size), std::invalid_argument);
}

TEST_CASE("kl_loss matches an independent dense evaluation") {
    CounterRng rng(2);
    for (int trial = 0; trial < 6; ++trial) {
        auto [circuit, params] = oracle::random_circuit(3, 14, rng);
        ProbabilityVector target = oracle::random_distribution(3, rng, 0.2);
        std::vector<oracle::cd> state = oracle::run_circuit_dense(circuit, params);
        double direct = 0.0;
        for (std::size_t x = 0; x < state.size(); ++x) {
            double px = target.mass[x];
            if (px <= 0) continue;
            direct += px * std::log(px / std::max(std::norm(state[x]), 1e-12));
        }
        CHECK(kl_loss(circuit, params, target) == doctest::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("gradient vanishes at an exact optimum") {
    ParameterizedCircuit circuit;
    circuit.num_qubits = 2;
    circuit.gates = {Gate::h(0), Gate::h(1), Gate::ry(0, 0), Gate::ry(1, 1), Gate::rzz(0, 1, 2)};
    circuit.num_params = 3;
    std::vector<double> zeros(3, 0.0);
    ProbabilityVector uniform{2, {0.25, 0.25, 0.25, 0.25}, 1.0};
    std::vector<double> grad = kl_gradient(circuit, zeros, uniform);
    double norm = 0.0;
    for (double g : grad) norm += g * g;
    CHECK(std::sqrt(norm) < 1e-6);
}

TEST_CASE("adjoint gradient matches central finite differences on grid ansatze") {
    CounterRng rng(42);
    auto [circuit, params] = random_ansatz(4, 1, rng);
    ProbabilityVector target = oracle::random_distribution(4, rng);
    std::vector<double> grad = kl_gradient(circuit, params, target);
    std::vector<double> reference = oracle::finite_difference_gradient(circuit, params, target);
    CHECK(gradient_matches(grad, reference, 1e-5));
}

TEST_CASE("adjoint gradient matches finite differences on random circuits") {
    CounterRng rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 2 + static_cast<int>(rng.next_u64() % 4);
        auto [circuit, params] = oracle::random_circuit(n, 18, rng);
        ProbabilityVector target = oracle::random_distribution(n, rng, 0.3);
        std::vector<double> grad = kl_gradient(circuit, params, target);
        std::vector<double> reference =
            oracle::finite_difference_gradient(circuit, params, target);
        CHECK(gradient_matches(grad, reference, 1e-5));
    }
}

TEST_CASE("z_mse_gradient matches finite differences") {
    CounterRng rng(44);
    for (int trial = 0; trial < 8; ++trial) {
        auto [circuit, params] = oracle::random_circuit(3, 14, rng);
        int qubit = static_cast<int>(rng.next_u64() % 3);
        double target = (trial % 2) ? 1.0 : -1.0;
        std::vector<double> grad = z_mse_gradient(circuit, params, qubit, target);

        auto loss_at = [&](std::span<const double> p) {
            double z = z_expectation(run_circuit(circuit, p), qubit);
            return (z - target) * (z - target);
        };
        std::vector<double> shifted(params.begin(), params.end());
        std::vector<double> reference(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            shifted[i] = params[i] + 1e-5;
            double up = loss_at(shifted);
            shifted[i] = params[i] - 1e-5;
            double down = loss_at(shifted);
            shifted[i] = params[i];
            reference[i] = (up - down) / 2e-5;
        }
        CHECK(gradient_matches(grad, reference, 1e-4));
    }
}

TEST_CASE("train_stage: already-optimal targets stay put") {
    ParameterizedCircuit circuit;
    circuit.num_qubits = 2;
    circuit.gates = {Gate::h(0), Gate::h(1), Gate::ry(0, 0), Gate::ry(1, 1)};
    circuit.num_params = 2;
    std::vector<double> zeros(2, 0.0);
    ProbabilityVector uniform{2, {0.25, 0.25, 0.25, 0.25}, 1.0};
    TrainConfig config;
    TrainResult result = train_stage(circuit, zeros, uniform, config, 30);
    CHECK(result.best_loss < 1e-12);
    CHECK(result.best_params[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(result.loss_trace.size() == 31);
}

TEST_CASE("train_stage reaches a sharp 2-qubit target") {
    GridLayout layout = GridLayout::from_axis_qubits(1, 1);
    HierarchySchedule schedule = HierarchySchedule::uniform(layout, 3, 1);
    ParameterizedCircuit circuit = build_stage_circuit(layout, schedule, 0);
    ProbabilityVector target{2, {0.7, 0.1, 0.1, 0.1}, 1.0};
    TrainConfig config;
    config.learning_rate = 0.05;
    CounterRng rng(1);
    std::vector<double> init(static_cast<std::size_t>(circuit.num_params));
    for (double& p : init) p = rng.next_double() * 6.28;
    TrainResult result = train_stage(circuit, init, target, config, 200);
    CHECK(result.best_loss < 0.01);
}

TEST_CASE("train_stage is deterministic given identical inputs") {
    GridLayout layout = GridLayout::from_axis_qubits(1, 1);
    HierarchySchedule schedule = HierarchySchedule::uniform(layout, 2, 1);
    ParameterizedCircuit circuit = build_stage_circuit(layout, schedule, 0);
    ProbabilityVector target{2, {0.4, 0.3, 0.2, 0.1}, 1.0};
    TrainConfig config;
    std::vector<double> init(static_cast<std::size_t>(circuit.num_params), 0.3);
    TrainResult a = train_stage(circuit, init, target, config, 50);
    TrainResult b = train_stage(circuit, init, target, config, 50);
    CHECK(a.loss_trace == b.loss_trace);
    CHECK(a.best_params == b.best_params);
}

TEST_CASE("single-stage hierarchical run equals train_flat") {
    GrayImage img = fixtures::scene_image(8, 8, 5);
    GridLayout layout = GridLayout::from_axis_qubits(3, 3);
    TrainConfig config;
    config.seed = 77;
    HierarchySchedule schedule = HierarchySchedule::single_stage(layout, 2, 40);
    HierarchicalResult staged = hierarchical_train(img, layout, schedule, config);
    HierarchicalResult flat = train_flat(img, layout, 2, 40, config);
    CHECK(staged.params == flat.params);
    CHECK(staged.reports.back().final_kl == flat.reports.back().final_kl);
}

TEST_CASE("stage boundaries are loss-neutral warm starts") {
    GrayImage img = fixtures::scene_image(8, 16, 9);
    GridLayout layout = GridLayout::from_axis_qubits(3, 4);
    HierarchySchedule schedule = HierarchySchedule::uniform(layout, 1, 25);
    TrainConfig config;
    config.seed = 3;
    HierarchicalResult result = hierarchical_train(img, layout, schedule, config);
    REQUIRE(result.reports.size() == 4);

    // The first loss of stage s+1 must equal the KL of stage s's best model,
    // expanded with |+> qubits, against the finer pooled target.
    for (std::size_t s = 0; s + 1 < result.reports.size(); ++s) {
        int cols_prev = static_cast<int>(s) + 1;
        int v_prev = std::min(cols_prev, 3), h_prev = std::min(cols_prev, 4);
        int v_next = std::min(cols_prev + 1, 3), h_next = std::min(cols_prev + 1, 4);

        // Simulate the stage-s circuit on the full register: inactive qubits
        // stay in |0>, so the active-register distribution sits at indices
        // whose inactive bits are zero.
        ParameterizedCircuit global = build_stage_circuit(layout, schedule, static_cast<int>(s));
        ProbabilityVector model = born_distribution(
            run_circuit(global, result.reports[s].best_params));
        ProbabilityVector active;
        active.num_qubits = v_prev + h_prev;
        active.mass.resize(std::size_t{1} << active.num_qubits);
        for (std::size_t y = 0; y < active.mass.size(); ++y) {
            std::size_t r = y >> h_prev, c = y & ((std::size_t{1} << h_prev) - 1);
            std::size_t full = ((r << (3 - v_prev)) << 4) | (c << (4 - h_prev));
            active.mass[y] = model.mass[full];
        }
        ProbabilityVector expanded =
            expand_distribution_axes(active, v_prev, h_prev, v_next, h_next);
        ProbabilityVector target =
            image_to_distribution(downsample(img, 1 << (3 - v_next), 1 << (4 - h_next)));
        double expected = kl_divergence(target, expanded, v_next + h_next);
        CHECK(result.reports[s + 1].kl_trace.front() ==
              doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("hierarchical runs are reproducible bit-for-bit") {
    GrayImage img = fixtures::scene_image(8, 8, 12);
    GridLayout layout = GridLayout::from_axis_qubits(3, 3);
    HierarchySchedule schedule = HierarchySchedule::uniform(layout, 1, 15);
    TrainConfig config;
    config.seed = 9;
    HierarchicalResult a = hierarchical_train(img, layout, schedule, config);
    HierarchicalResult b = hierarchical_train(img, layout, schedule, config);
    CHECK(a.params == b.params);
    for (std::size_t s = 0; s < a.reports.size(); ++s)
        CHECK(a.reports[s].kl_trace == b.reports[s].kl_trace);
}

TEST_CASE("flat training reaches a smooth 2-qubit target") {
    GrayImage img = GrayImage::filled(2, 2, 0.0);
    img.at(0, 0) = 0.9;
    img.at(0, 1) = 0.5;
    img.at(1, 0) = 0.3;
    img.at(1, 1) = 0.2;
    GridLayout layout = GridLayout::from_axis_qubits(1, 1);
    TrainConfig config;
    config.learning_rate = 0.05;
    config.seed = 4;
    HierarchicalResult result = train_flat(img, layout, 3, 250, config);
    CHECK(result.reports.back().final_kl < 0.01);
}

TEST_CASE("proportional iteration split favors wide stages and keeps the total") {
    GridLayout layout = GridLayout::from_total_qubits(8);
    HierarchySchedule schedule = HierarchySchedule::uniform(layout, 1, 0);
    std::vector<int> iters = proportional_iterations(layout, schedule.stages, 400);
    CHECK(iters.size() == 4);
    int total = 0;
    for (std::size_t s = 0; s < iters.size(); ++s) {
        CHECK(iters[s] >= 1);
        if (s > 0) CHECK(iters[s] >= iters[s - 1]);
        total += iters[s];
    }
    CHECK(total == 400);
}

TEST_CASE("block training loads constant tiles exactly and composes") {
    GrayImage img = GrayImage::filled(8, 16, 0.0);
    BlockDecomposition ref = partition_blocks(img, 2);
    for (int id = 0; id < ref.num_blocks(); ++id) {
        double level = 0.1 + 0.1 * id;
        int tr = id / ref.tile_cols, tc = id % ref.tile_cols;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) img.at(tr * 4 + r, tc * 4 + c) = level;
    }
    ScheduleTemplate tmpl;
    tmpl.layers_per_stage = 1;
    tmpl.total_iterations = 500;
    TrainConfig config;
    config.seed = 21;
    config.learning_rate = 0.05;
    BaeResult result = train_bae(img, 2, tmpl, config);
    CHECK(result.blocks.size() == 8);
    for (const BlockTrainResult& block : result.blocks) {
        CHECK(block.ok());
        CHECK(block.final_kl < 2e-3);  // randomized first layer needs to anneal away
    }
    CHECK(result.assembled_tvd < 0.03);
}

TEST_CASE("block results do not depend on scheduling order or parallelism") {
    GrayImage img = fixtures::scene_image(8, 16, 33);
    ScheduleTemplate tmpl;
    tmpl.layers_per_stage = 1;
    tmpl.total_iterations = 20;
    TrainConfig config;
    config.seed = 13;
    BaeResult serial = train_bae(img, 2, tmpl, config, 1);
    BaeResult parallel = train_bae(img, 2, tmpl, config, 4);
    REQUIRE(serial.blocks.size() == parallel.blocks.size());
    for (std::size_t i = 0; i < serial.blocks.size(); ++i)
        CHECK(serial.blocks[i].params == parallel.blocks[i].params);
    CHECK(serial.assembled_tvd == doctest::Approx(parallel.assembled_tvd).epsilon(1e-12));
}

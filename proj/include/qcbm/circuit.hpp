#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qcbm/gates.hpp"

namespace qcbm {

struct ParameterizedCircuit {
    int num_qubits = 0;
    std::vector<Gate> gates;
    int num_params = 0;

    // Checks qubit bounds, two-qubit distinctness, and that every slot in
    // [0, num_params) is referenced by at least one gate.
    void validate() const;
};

// Two-row qubit grid. The bottom row holds the vertical-significance qubits
// (leftmost = most significant = qubit 0), the top row the horizontal ones
// (leftmost = qubit vertical_qubits). Grid column c therefore pairs the
// c-th most significant qubit of each image axis; with an odd qubit count
// the last column has a single cell on the longer axis.
struct GridLayout {
    int vertical_qubits = 0;
    int horizontal_qubits = 0;

    static GridLayout from_axis_qubits(int vertical, int horizontal);
    // Splits n over the two axes with the extra qubit (odd n) horizontal.
    static GridLayout from_total_qubits(int n);

    int num_qubits() const { return vertical_qubits + horizontal_qubits; }
    int columns() const;

    bool has_vertical(int col) const { return col < vertical_qubits; }
    bool has_horizontal(int col) const { return col < horizontal_qubits; }
    int vertical_qubit(int col) const { return col; }
    int horizontal_qubit(int col) const { return vertical_qubits + col; }

    // Qubits of the leftmost `cols` columns, in ascending qubit order.
    std::vector<int> active_qubits(int cols) const;

    // Nearest-neighbor edges among the leftmost `cols` columns. Ordered
    // column-major left to right; column c contributes its vertical rung,
    // then the top edge (c-1, c), then the bottom edge (c-1, c), so growing
    // the grid by one column appends exactly that column's edges.
    std::vector<std::pair<int, int>> active_edges(int cols) const;
};

struct HierarchyStage {
    int active_columns = 0;
    int layers = 0;
    int iterations = 0;
};

// Ordered training stages over growing prefixes of grid columns. Consecutive
// stages differ by exactly one column; the final stage must cover the grid.
struct HierarchySchedule {
    std::vector<HierarchyStage> stages;

    void validate(const GridLayout& layout) const;
    static HierarchySchedule uniform(const GridLayout& layout, int layers_per_stage,
                                     int iterations_per_stage);
    static HierarchySchedule single_stage(const GridLayout& layout, int layers,
                                          int iterations);
    static HierarchySchedule from_layers(const GridLayout& layout,
                                         std::span<const int> layers_per_stage,
                                         int iterations_per_stage = 1);
};

// Circuit for stages [0, stage]: each stage appends H on its newly activated
// qubits, then `layers` blocks of RY+RZ slots on every active qubit followed
// by RZZ slots on every active edge. Qubit indices are global, so each
// stage's gate list is a strict prefix of the next stage's.
ParameterizedCircuit build_stage_circuit(const GridLayout& layout,
                                         const HierarchySchedule& schedule, int stage);

// Warm start for a grown circuit: copies the parameters of the prefix and
// zero-initializes every new slot. Throws if `next` does not extend `prev`.
std::vector<double> lift_parameters(std::span<const double> prev_params,
                                    const ParameterizedCircuit& prev,
                                    const ParameterizedCircuit& next);

int count_two_qubit_gates(const ParameterizedCircuit& circuit);

enum class GateBasis { RzzNative, CnotNative };

// CnotNative rewrites each RZZ(t) on (a, b) as CNOT(a,b) RZ(t on b) CNOT(a,b);
// the Born distribution is unchanged for every parameter vector.
ParameterizedCircuit compile_to_basis(const ParameterizedCircuit& circuit, GateBasis basis);

enum class ExportFormat { Qasm2, Json };

// Self-contained textual circuit with parameters bound. The JSON form is the
// canonical persistence format and reimports bit-exactly.
std::string export_circuit(const ParameterizedCircuit& circuit,
                           std::span<const double> params, ExportFormat format);

std::pair<ParameterizedCircuit, std::vector<double>> import_circuit(const std::string& json_text);

// Slot/gate accounting for whole schedules, used to hit parameter or
// two-qubit-gate budgets by construction.
int schedule_param_count(const GridLayout& layout, const HierarchySchedule& schedule);
int schedule_two_qubit_gates(const GridLayout& layout, const HierarchySchedule& schedule);

// Per-stage layer counts for a full 1..columns() hierarchy that exactly or
// maximally fill the given budget. Greedy: one layer per stage when the
// budget allows, then repeatedly add a layer to the rightmost stage that
// still fits. Stages may end up with zero layers under tight budgets.
std::vector<int> layers_for_two_qubit_budget(const GridLayout& layout, int budget);
std::vector<int> layers_for_param_budget(const GridLayout& layout, int budget);

// Slots belonging to the first rotation+entangler layer of the first stage;
// these are the only randomized initial parameters.
int first_layer_param_count(const GridLayout& layout, const HierarchySchedule& schedule);

} // namespace qcbm

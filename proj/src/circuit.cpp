#include "qcbm/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qcbm {

namespace {

const char* gate_name(GateKind kind) {
    switch (kind) {
        case GateKind::H: return "h";
        case GateKind::X: return "x";
        case GateKind::RY: return "ry";
        case GateKind::RZ: return "rz";
        case GateKind::RZZ: return "rzz";
        case GateKind::CNOT: return "cx";
    }
    return "?";
}

GateKind gate_kind_from_name(const std::string& name) {
    if (name == "h") return GateKind::H;
    if (name == "x") return GateKind::X;
    if (name == "ry") return GateKind::RY;
    if (name == "rz") return GateKind::RZ;
    if (name == "rzz") return GateKind::RZZ;
    if (name == "cx") return GateKind::CNOT;
    throw std::invalid_argument("unknown gate name: " + name);
}

// Appends the gates of one stage: H on newly activated qubits, then each
// layer's rotations and entanglers over everything active so far.
void append_stage(ParameterizedCircuit& circuit, const GridLayout& layout, int prev_columns,
                  int columns, int layers) {
    for (int col = prev_columns; col < columns; ++col) {
        if (layout.has_vertical(col)) circuit.gates.push_back(Gate::h(layout.vertical_qubit(col)));
        if (layout.has_horizontal(col))
            circuit.gates.push_back(Gate::h(layout.horizontal_qubit(col)));
    }
    std::vector<int> qubits = layout.active_qubits(columns);
    std::vector<std::pair<int, int>> edges = layout.active_edges(columns);
    for (int layer = 0; layer < layers; ++layer) {
        for (int q : qubits) {
            circuit.gates.push_back(Gate::ry(q, circuit.num_params++));
            circuit.gates.push_back(Gate::rz(q, circuit.num_params++));
        }
        for (auto [a, b] : edges)
            circuit.gates.push_back(Gate::rzz(a, b, circuit.num_params++));
    }
}

std::vector<int> greedy_layers(const GridLayout& layout, int budget,
                               int (*stage_weight)(const GridLayout&, int)) {
    int stages = layout.columns();
    std::vector<int> weights(stages);
    int baseline = 0;
    for (int s = 0; s < stages; ++s) {
        weights[s] = stage_weight(layout, s + 1);
        baseline += weights[s];
    }
    std::vector<int> layers(stages, 0);
    int used = 0;
    if (baseline <= budget) {
        layers.assign(stages, 1);
        used = baseline;
    }
    // Fill from the widest (rightmost) stage down, taking every layer that
    // still fits, so fixed budgets like a 65 two-qubit-gate cap are hit
    // exactly when possible.
    for (int s = stages - 1; s >= 0; --s) {
        if (weights[s] == 0) continue;
        while (used + weights[s] <= budget) {
            ++layers[s];
            used += weights[s];
        }
    }
    return layers;
}

int two_qubit_weight(const GridLayout& layout, int columns) {
    return static_cast<int>(layout.active_edges(columns).size());
}

int param_weight(const GridLayout& layout, int columns) {
    return 2 * static_cast<int>(layout.active_qubits(columns).size()) +
           static_cast<int>(layout.active_edges(columns).size());
}

} // namespace

void ParameterizedCircuit::validate() const {
    std::vector<bool> used(static_cast<std::size_t>(num_params), false);
    for (const Gate& g : gates) {
        if (g.qubit0 < 0 || g.qubit0 >= num_qubits)
            throw std::out_of_range("circuit gate qubit out of range");
        if (is_two_qubit(g.kind)) {
            if (g.qubit1 < 0 || g.qubit1 >= num_qubits)
                throw std::out_of_range("circuit gate qubit out of range");
            if (g.qubit0 == g.qubit1)
                throw std::invalid_argument("two-qubit gate needs distinct qubits");
        }
        if (g.param_slot != Gate::kFixedAngle) {
            if (!has_angle(g)) throw std::invalid_argument("parameter slot on a fixed gate");
            if (g.param_slot < 0 || g.param_slot >= num_params)
                throw std::out_of_range("parameter slot out of range");
            used[static_cast<std::size_t>(g.param_slot)] = true;
        }
    }
    for (int s = 0; s < num_params; ++s)
        if (!used[static_cast<std::size_t>(s)])
            throw std::invalid_argument("unreferenced parameter slot");
}

GridLayout GridLayout::from_axis_qubits(int vertical, int horizontal) {
    if (vertical < 0 || horizontal < 0 || vertical + horizontal < 1)
        throw std::invalid_argument("grid layout needs at least one qubit");
    if (std::abs(vertical - horizontal) > 1)
        throw std::invalid_argument("grid rows may differ by at most one qubit");
    return {vertical, horizontal};
}

GridLayout GridLayout::from_total_qubits(int n) {
    if (n < 1) throw std::invalid_argument("grid layout needs at least one qubit");
    return {n / 2, n - n / 2};
}

int GridLayout::columns() const { return std::max(vertical_qubits, horizontal_qubits); }

std::vector<int> GridLayout::active_qubits(int cols) const {
    std::vector<int> qubits;
    for (int c = 0; c < std::min(cols, vertical_qubits); ++c) qubits.push_back(vertical_qubit(c));
    for (int c = 0; c < std::min(cols, horizontal_qubits); ++c)
        qubits.push_back(horizontal_qubit(c));
    return qubits;
}

std::vector<std::pair<int, int>> GridLayout::active_edges(int cols) const {
    std::vector<std::pair<int, int>> edges;
    for (int c = 0; c < cols; ++c) {
        if (has_vertical(c) && has_horizontal(c))
            edges.emplace_back(vertical_qubit(c), horizontal_qubit(c));
        if (c >= 1 && has_horizontal(c))
            edges.emplace_back(horizontal_qubit(c - 1), horizontal_qubit(c));
        if (c >= 1 && has_vertical(c))
            edges.emplace_back(vertical_qubit(c - 1), vertical_qubit(c));
    }
    return edges;
}

void HierarchySchedule::validate(const GridLayout& layout) const {
    if (stages.empty()) throw std::invalid_argument("schedule has no stages");
    int prev = 0;
    for (const HierarchyStage& stage : stages) {
        if (stage.active_columns < 1 || stage.active_columns > layout.columns())
            throw std::invalid_argument("stage active columns out of range");
        if (prev != 0 && stage.active_columns != prev + 1)
            throw std::invalid_argument("each stage must add exactly one grid column");
        if (stage.layers < 0) throw std::invalid_argument("stage layer count must be >= 0");
        prev = stage.active_columns;
    }
}

HierarchySchedule HierarchySchedule::uniform(const GridLayout& layout, int layers_per_stage,
                                             int iterations_per_stage) {
    HierarchySchedule schedule;
    for (int c = 1; c <= layout.columns(); ++c)
        schedule.stages.push_back({c, layers_per_stage, iterations_per_stage});
    return schedule;
}

HierarchySchedule HierarchySchedule::single_stage(const GridLayout& layout, int layers,
                                                  int iterations) {
    HierarchySchedule schedule;
    schedule.stages.push_back({layout.columns(), layers, iterations});
    return schedule;
}

HierarchySchedule HierarchySchedule::from_layers(const GridLayout& layout,
                                                 std::span<const int> layers_per_stage,
                                                 int iterations_per_stage) {
    if (static_cast<int>(layers_per_stage.size()) != layout.columns())
        throw std::invalid_argument("need one layer count per grid column");
    HierarchySchedule schedule;
    for (int c = 1; c <= layout.columns(); ++c)
        schedule.stages.push_back({c, layers_per_stage[c - 1], iterations_per_stage});
    return schedule;
}

ParameterizedCircuit build_stage_circuit(const GridLayout& layout,
                                         const HierarchySchedule& schedule, int stage) {
    schedule.validate(layout);
    if (stage < 0 || stage >= static_cast<int>(schedule.stages.size()))
        throw std::out_of_range("stage index out of range");
    ParameterizedCircuit circuit;
    circuit.num_qubits = layout.num_qubits();
    int prev_columns = 0;
    for (int s = 0; s <= stage; ++s) {
        const HierarchyStage& st = schedule.stages[static_cast<std::size_t>(s)];
        if (layout.active_qubits(st.active_columns).empty())
            throw std::invalid_argument("stage has an empty active set");
        append_stage(circuit, layout, prev_columns, st.active_columns, st.layers);
        prev_columns = st.active_columns;
    }
    return circuit;
}

std::vector<double> lift_parameters(std::span<const double> prev_params,
                                    const ParameterizedCircuit& prev,
                                    const ParameterizedCircuit& next) {
    if (static_cast<int>(prev_params.size()) != prev.num_params)
        throw std::invalid_argument("lift_parameters: parameter count mismatch");
    if (next.num_params < prev.num_params || next.gates.size() < prev.gates.size())
        throw std::invalid_argument("lift_parameters: next circuit does not extend prev");
    for (std::size_t i = 0; i < prev.gates.size(); ++i)
        if (!(next.gates[i] == prev.gates[i]))
            throw std::invalid_argument("lift_parameters: gate prefix mismatch");
    std::vector<double> params(static_cast<std::size_t>(next.num_params), 0.0);
    std::copy(prev_params.begin(), prev_params.end(), params.begin());
    return params;
}

int count_two_qubit_gates(const ParameterizedCircuit& circuit) {
    int count = 0;
    for (const Gate& g : circuit.gates)
        if (is_two_qubit(g.kind)) ++count;
    return count;
}

ParameterizedCircuit compile_to_basis(const ParameterizedCircuit& circuit, GateBasis basis) {
    if (basis == GateBasis::RzzNative) return circuit;
    ParameterizedCircuit out;
    out.num_qubits = circuit.num_qubits;
    out.num_params = circuit.num_params;
    for (const Gate& g : circuit.gates) {
        if (g.kind != GateKind::RZZ) {
            out.gates.push_back(g);
            continue;
        }
        out.gates.push_back(Gate::cnot(g.qubit0, g.qubit1));
        Gate rz{GateKind::RZ, g.qubit1, -1, g.param_slot, g.fixed_angle};
        out.gates.push_back(rz);
        out.gates.push_back(Gate::cnot(g.qubit0, g.qubit1));
    }
    return out;
}

namespace {

std::string export_qasm2(const ParameterizedCircuit& circuit, std::span<const double> params) {
    std::ostringstream os;
    os.precision(17);
    os << "OPENQASM 2.0;\n";
    os << "include \"qelib1.inc\";\n";
    os << "gate rzz(theta) a,b { cx a,b; rz(theta) b; cx a,b; }\n";
    os << "qreg q[" << circuit.num_qubits << "];\n";
    for (const Gate& g : circuit.gates) {
        switch (g.kind) {
            case GateKind::H: os << "h q[" << g.qubit0 << "];\n"; break;
            case GateKind::X: os << "x q[" << g.qubit0 << "];\n"; break;
            case GateKind::RY:
                os << "ry(" << gate_angle(g, params) << ") q[" << g.qubit0 << "];\n";
                break;
            case GateKind::RZ:
                os << "rz(" << gate_angle(g, params) << ") q[" << g.qubit0 << "];\n";
                break;
            case GateKind::RZZ:
                os << "rzz(" << gate_angle(g, params) << ") q[" << g.qubit0 << "],q[" << g.qubit1
                   << "];\n";
                break;
            case GateKind::CNOT:
                os << "cx q[" << g.qubit0 << "],q[" << g.qubit1 << "];\n";
                break;
        }
    }
    return os.str();
}

} // namespace

std::string export_circuit(const ParameterizedCircuit& circuit, std::span<const double> params,
                           ExportFormat format) {
    if (static_cast<int>(params.size()) != circuit.num_params)
        throw std::invalid_argument("export_circuit: parameter count mismatch");
    if (format == ExportFormat::Qasm2) return export_qasm2(circuit, params);

    nlohmann::json doc;
    doc["format"] = "qcbm-circuit-v1";
    doc["num_qubits"] = circuit.num_qubits;
    doc["num_params"] = circuit.num_params;
    nlohmann::json gates = nlohmann::json::array();
    for (const Gate& g : circuit.gates) {
        nlohmann::json jg;
        jg["gate"] = gate_name(g.kind);
        if (is_two_qubit(g.kind))
            jg["qubits"] = {g.qubit0, g.qubit1};
        else
            jg["qubits"] = {g.qubit0};
        if (has_angle(g)) {
            if (g.param_slot != Gate::kFixedAngle)
                jg["slot"] = g.param_slot;
            else
                jg["angle"] = g.fixed_angle;
        }
        gates.push_back(std::move(jg));
    }
    doc["gates"] = std::move(gates);
    doc["params"] = std::vector<double>(params.begin(), params.end());
    return doc.dump(2) + "\n";
}

std::pair<ParameterizedCircuit, std::vector<double>> import_circuit(const std::string& json_text) {
    nlohmann::json doc = nlohmann::json::parse(json_text);
    if (doc.value("format", "") != "qcbm-circuit-v1")
        throw std::invalid_argument("unsupported circuit document format");
    ParameterizedCircuit circuit;
    circuit.num_qubits = doc.at("num_qubits").get<int>();
    circuit.num_params = doc.at("num_params").get<int>();
    for (const auto& jg : doc.at("gates")) {
        Gate g;
        g.kind = gate_kind_from_name(jg.at("gate").get<std::string>());
        const auto& qubits = jg.at("qubits");
        g.qubit0 = qubits.at(0).get<int>();
        if (is_two_qubit(g.kind)) g.qubit1 = qubits.at(1).get<int>();
        if (has_angle(g)) {
            if (jg.contains("slot"))
                g.param_slot = jg.at("slot").get<int>();
            else
                g.fixed_angle = jg.at("angle").get<double>();
        }
        circuit.gates.push_back(g);
    }
    std::vector<double> params = doc.at("params").get<std::vector<double>>();
    if (static_cast<int>(params.size()) != circuit.num_params)
        throw std::invalid_argument("circuit document parameter count mismatch");
    circuit.validate();
    return {std::move(circuit), std::move(params)};
}

int schedule_param_count(const GridLayout& layout, const HierarchySchedule& schedule) {
    schedule.validate(layout);
    int total = 0;
    for (const HierarchyStage& stage : schedule.stages)
        total += stage.layers * param_weight(layout, stage.active_columns);
    return total;
}

int schedule_two_qubit_gates(const GridLayout& layout, const HierarchySchedule& schedule) {
    schedule.validate(layout);
    int total = 0;
    for (const HierarchyStage& stage : schedule.stages)
        total += stage.layers * two_qubit_weight(layout, stage.active_columns);
    return total;
}

std::vector<int> layers_for_two_qubit_budget(const GridLayout& layout, int budget) {
    return greedy_layers(layout, budget, two_qubit_weight);
}

std::vector<int> layers_for_param_budget(const GridLayout& layout, int budget) {
    return greedy_layers(layout, budget, param_weight);
}

int first_layer_param_count(const GridLayout& layout, const HierarchySchedule& schedule) {
    schedule.validate(layout);
    for (const HierarchyStage& stage : schedule.stages)
        if (stage.layers > 0) return param_weight(layout, stage.active_columns);
    return 0;
}

} // namespace qcbm

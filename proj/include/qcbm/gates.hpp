#pragma once

#include <span>

namespace qcbm {

enum class GateKind { H, X, RY, RZ, RZZ, CNOT };

// One circuit entry. Rotation gates carry either a parameter slot index or a
// fixed angle in radians. Conventions: RY(t) = exp(-i t Y / 2),
// RZ(t) = exp(-i t Z / 2), RZZ(t) = exp(-i t Z(x)Z / 2); CNOT's first qubit
// is the control.
struct Gate {
    static constexpr int kFixedAngle = -1;

    GateKind kind = GateKind::H;
    int qubit0 = 0;
    int qubit1 = -1;
    int param_slot = kFixedAngle;
    double fixed_angle = 0.0;

    static Gate h(int q) { return {GateKind::H, q}; }
    static Gate x(int q) { return {GateKind::X, q}; }
    static Gate ry(int q, int slot) { return {GateKind::RY, q, -1, slot}; }
    static Gate rz(int q, int slot) { return {GateKind::RZ, q, -1, slot}; }
    static Gate rzz(int a, int b, int slot) { return {GateKind::RZZ, a, b, slot}; }
    static Gate cnot(int control, int target) { return {GateKind::CNOT, control, target}; }
    static Gate ry_fixed(int q, double angle) { return {GateKind::RY, q, -1, kFixedAngle, angle}; }
    static Gate rz_fixed(int q, double angle) { return {GateKind::RZ, q, -1, kFixedAngle, angle}; }
    static Gate rzz_fixed(int a, int b, double angle) { return {GateKind::RZZ, a, b, kFixedAngle, angle}; }

    bool operator==(const Gate&) const = default;
};

inline bool is_two_qubit(GateKind kind) {
    return kind == GateKind::RZZ || kind == GateKind::CNOT;
}

inline bool is_parameterized_kind(GateKind kind) {
    return kind == GateKind::RY || kind == GateKind::RZ || kind == GateKind::RZZ;
}

inline bool has_angle(const Gate& g) { return is_parameterized_kind(g.kind); }

inline double gate_angle(const Gate& g, std::span<const double> params) {
    return g.param_slot == Gate::kFixedAngle ? g.fixed_angle
                                             : params[static_cast<std::size_t>(g.param_slot)];
}

} // namespace qcbm

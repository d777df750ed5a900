#pragma once

// Gate IR for the NOHE circuits, sequential and parallelized builders,
// Fredkin gadget expansion, classical reversible simulation and exact
// cost accounting.

#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qramsim/bitvec.hpp"
#include "qramsim/encoding.hpp"

namespace qramsim {

enum class GateKind : std::uint8_t { X, Z, H, CZ, CNOT, SWAP, Toffoli, Fredkin };

inline const char* gate_name(GateKind k) {
    switch (k) {
        case GateKind::X: return "X";
        case GateKind::Z: return "Z";
        case GateKind::H: return "H";
        case GateKind::CZ: return "CZ";
        case GateKind::CNOT: return "CNOT";
        case GateKind::SWAP: return "SWAP";
        case GateKind::Toffoli: return "TOFFOLI";
        case GateKind::Fredkin: return "FREDKIN";
    }
    return "?";
}

inline int gate_arity(GateKind k) {
    switch (k) {
        case GateKind::X: case GateKind::Z: case GateKind::H: return 1;
        case GateKind::CZ: case GateKind::CNOT: case GateKind::SWAP: return 2;
        case GateKind::Toffoli: case GateKind::Fredkin: return 3;
    }
    return 0;
}

// Controls are listed before targets: CNOT(c,t), TOFFOLI(c1,c2,t),
// FREDKIN(c, t1, t2).
struct Gate {
    GateKind kind;
    std::array<int, 3> q{-1, -1, -1};

    Gate(GateKind k, int a) : kind(k), q{a, -1, -1} { assert(gate_arity(k) == 1); }
    Gate(GateKind k, int a, int b) : kind(k), q{a, b, -1} {
        assert(gate_arity(k) == 2 && a != b);
    }
    Gate(GateKind k, int a, int b, int c) : kind(k), q{a, b, c} {
        assert(gate_arity(k) == 3 && a != b && a != c && b != c);
    }
    int arity() const { return gate_arity(kind); }
    bool operator==(const Gate& o) const { return kind == o.kind && q == o.q; }
};

struct Circuit {
    int qubit_count = 0;
    std::vector<Gate> gates;
};

struct LayeredCircuit {
    int qubit_count = 0;
    std::vector<std::vector<Gate>> layers;
    // First layer index at which a qubit participates in any gate
    // (qubit_count entries; layers.size() for never-touched qubits).
    std::vector<int> alive_from;
    int swap_layer_count = 0; // leading relabeling layers
    int cs_layer_count = 0;   // controlled-swap rounds after the swaps

    Circuit flatten() const {
        Circuit c;
        c.qubit_count = qubit_count;
        for (const auto& l : layers)
            for (const auto& g : l) c.gates.push_back(g);
        return c;
    }

    void compute_alive_from() {
        alive_from.assign(qubit_count, int(layers.size()));
        for (int t = 0; t < int(layers.size()); ++t)
            for (const auto& g : layers[t])
                for (int i = 0; i < g.arity(); ++i)
                    if (alive_from[g.q[i]] > t) alive_from[g.q[i]] = t;
    }

    bool layers_disjoint(std::string* err = nullptr) const {
        for (int t = 0; t < int(layers.size()); ++t) {
            std::vector<char> used(qubit_count, 0);
            for (const auto& g : layers[t])
                for (int i = 0; i < g.arity(); ++i) {
                    if (used[g.q[i]]) {
                        if (err) *err = "qubit " + std::to_string(g.q[i]) +
                                        " repeated in layer " + std::to_string(t);
                        return false;
                    }
                    used[g.q[i]] = 1;
                }
        }
        return true;
    }
};

struct CostReport {
    std::uint64_t toffoli_count = 0;
    std::uint64_t t_count = 0;
    int cs_layer_depth = 0;
    int total_depth = 0; // cs layers plus leading swap layers
    std::uint64_t gate_total = 0;
};

// ---------------------------------------------------------------------------
// Classical reversible simulation (basis states, phase-free gate set).

inline void apply_gate_classical(const Gate& g, BitVec& s) {
    switch (g.kind) {
        case GateKind::X:
            s.flip(g.q[0]);
            break;
        case GateKind::CNOT:
            if (s.get(g.q[0])) s.flip(g.q[1]);
            break;
        case GateKind::SWAP: {
            bool a = s.get(g.q[0]), b = s.get(g.q[1]);
            s.set(g.q[0], b);
            s.set(g.q[1], a);
            break;
        }
        case GateKind::Toffoli:
            if (s.get(g.q[0]) && s.get(g.q[1])) s.flip(g.q[2]);
            break;
        case GateKind::Fredkin:
            if (s.get(g.q[0])) {
                bool a = s.get(g.q[1]), b = s.get(g.q[2]);
                s.set(g.q[1], b);
                s.set(g.q[2], a);
            }
            break;
        default:
            throw std::invalid_argument("apply_gate_classical: non-classical gate");
    }
}

inline BitVec run_classical(const Circuit& c, BitVec s) {
    for (const auto& g : c.gates) apply_gate_classical(g, s);
    return s;
}

// ---------------------------------------------------------------------------
// NOHE circuit builders.
//
// Core construction is parameterized by the number of sectors L (address
// bits, bus included when present) and acts on 2^L - 1 wires. Sector K
// occupies wires [2^K-1, 2^{K+1}-2]; the input is flat: x_K on wire K,
// ancillas |0> after. CSbar(K|J) uses sector-K wire i as control of the
// Fredkin on sector-J wires i and i+2^K.

namespace detail {

inline int nohe_sectors(std::uint64_t N, bool with_bus) {
    int logn = log2_exact(N);
    if (logn < 1) throw std::invalid_argument("N must be >= 2");
    return logn + (with_bus ? 1 : 0);
}

inline std::vector<Gate> csbar(int K, int J) {
    std::vector<Gate> out;
    int base_k = (1 << K) - 1, base_j = (1 << J) - 1;
    for (int i = 0; i < (1 << K); ++i)
        out.emplace_back(GateKind::Fredkin, base_k + i, base_j + i, base_j + i + (1 << K));
    return out;
}

// The initial swaps S_{K,2^K-1} reorder the flat input so that x_K sits at
// the start of sector K. Descending K keeps sources intact (S_{3,7} must
// fire before S_{2,3}, and S_{7,127} before S_{3,7}); the swaps are packed
// greedily into qubit-disjoint layers that respect this order.
inline std::vector<std::vector<Gate>> swap_stage(int L) {
    std::vector<std::vector<Gate>> layers;
    std::vector<std::vector<char>> used;
    for (int K = L - 1; K >= 2; --K) {
        Gate g(GateKind::SWAP, K, (1 << K) - 1);
        std::size_t t = 0;
        // earliest layer not touching g's qubits, but never before a layer
        // that already holds a conflicting (later-K) swap
        std::size_t lo = 0;
        for (std::size_t i = 0; i < layers.size(); ++i)
            if (used[i][g.q[0]] || used[i][g.q[1]]) lo = i + 1;
        t = lo;
        if (t == layers.size()) {
            layers.emplace_back();
            used.emplace_back(std::vector<char>((1 << L) - 1, 0));
        }
        layers[t].push_back(g);
        used[t][g.q[0]] = used[t][g.q[1]] = 1;
    }
    return layers;
}

} // namespace detail

// Sequential decomposition: swaps (descending K), then CSbar(K|J) blocks
// with K outer ascending and J inner ascending (rightmost factors of the
// operator product act first).
inline Circuit build_nohe_sequential(std::uint64_t N, bool with_bus) {
    int L = detail::nohe_sectors(N, with_bus);
    Circuit c;
    c.qubit_count = (1 << L) - 1;
    for (const auto& layer : detail::swap_stage(L))
        for (const auto& g : layer) c.gates.push_back(g);
    for (int K = 0; K <= L - 2; ++K)
        for (int J = K + 1; J <= L - 1; ++J)
            for (const auto& g : detail::csbar(K, J)) c.gates.push_back(g);
    return c;
}

// Parallel schedule: CS layer T = 1..2(L-1)-1 holds CSbar(K|T-K) for
// max(0, T-(L-1)) <= K <= floor((T-1)/2). Layers are qubit-disjoint and
// preserve the ascending-K order within each target sector.
inline LayeredCircuit build_nohe_parallel(std::uint64_t N, bool with_bus) {
    int L = detail::nohe_sectors(N, with_bus);
    int smax = L - 1;
    LayeredCircuit lc;
    lc.qubit_count = (1 << L) - 1;
    auto swaps = detail::swap_stage(L);
    lc.swap_layer_count = int(swaps.size());
    for (auto& s : swaps) lc.layers.push_back(std::move(s));
    int tf = 2 * smax - 1;
    if (tf < 0) tf = 0;
    for (int T = 1; T <= tf; ++T) {
        std::vector<Gate> layer;
        int klo = std::max(0, T - smax);
        int khi = (T - 1) / 2;
        for (int K = klo; K <= khi; ++K)
            for (const auto& g : detail::csbar(K, T - K)) layer.push_back(g);
        lc.layers.push_back(std::move(layer));
    }
    lc.cs_layer_count = tf;
    lc.compute_alive_from();
    return lc;
}

// Replace each CS(a|b,c) with TOFFOLI(a,b;c) then CNOT(c;b). Equal action
// whenever the second target enters in |0>, which the NOHE circuits
// guarantee on valid inputs.
inline Circuit expand_gadgets(const Circuit& c) {
    Circuit out;
    out.qubit_count = c.qubit_count;
    for (const auto& g : c.gates) {
        if (g.kind == GateKind::Fredkin) {
            out.gates.emplace_back(GateKind::Toffoli, g.q[0], g.q[1], g.q[2]);
            out.gates.emplace_back(GateKind::CNOT, g.q[2], g.q[1]);
        } else {
            out.gates.push_back(g);
        }
    }
    return out;
}

// Layered variant: each CS layer splits into a Toffoli sublayer and a CNOT
// sublayer (the two halves of a gadget share wires).
inline LayeredCircuit expand_gadgets(const LayeredCircuit& lc) {
    LayeredCircuit out;
    out.qubit_count = lc.qubit_count;
    out.swap_layer_count = lc.swap_layer_count;
    out.cs_layer_count = lc.cs_layer_count;
    for (const auto& layer : lc.layers) {
        bool has_fredkin = false;
        for (const auto& g : layer)
            if (g.kind == GateKind::Fredkin) has_fredkin = true;
        if (!has_fredkin) {
            out.layers.push_back(layer);
            continue;
        }
        std::vector<Gate> toffs, cnots;
        for (const auto& g : layer) {
            if (g.kind == GateKind::Fredkin) {
                toffs.emplace_back(GateKind::Toffoli, g.q[0], g.q[1], g.q[2]);
                cnots.emplace_back(GateKind::CNOT, g.q[2], g.q[1]);
            } else {
                toffs.push_back(g);
            }
        }
        out.layers.push_back(std::move(toffs));
        out.layers.push_back(std::move(cnots));
    }
    out.compute_alive_from();
    return out;
}

inline CostReport count_costs(std::uint64_t N, bool with_bus) {
    int L = detail::nohe_sectors(N, with_bus);
    auto lc = build_nohe_parallel(N, with_bus);
    CostReport r;
    r.toffoli_count = (std::uint64_t(1) << L) - std::uint64_t(L) - 1;
    r.t_count = 4 * r.toffoli_count;
    r.cs_layer_depth = lc.cs_layer_count;
    r.total_depth = lc.cs_layer_count + lc.swap_layer_count;
    std::uint64_t counted = 0, total = 0;
    for (const auto& layer : lc.layers)
        for (const auto& g : layer) {
            ++total;
            if (g.kind == GateKind::Fredkin) ++counted;
        }
    if (counted != r.toffoli_count)
        throw std::logic_error("count_costs: closed form disagrees with the built circuit");
    r.gate_total = total;
    return r;
}

// ---------------------------------------------------------------------------
// Equivalence checking: sequential, parallel and gadget-expanded circuits
// agree as basis-state maps, and on valid inputs produce nohe(x).

struct EquivalenceReport {
    bool ok = true;
    std::string detail;
};

// Expected output bits for the valid input |x> (+ bus bit when present):
// sector K of the NOHE string, with the bus pointer in sector L-1.
inline BitVec nohe_output_bits(std::uint64_t N, bool with_bus, std::uint32_t addr, int bus) {
    int logn = log2_exact(N);
    int L = logn + (with_bus ? 1 : 0);
    BitVec out((std::size_t(1) << L) - 1);
    Address x(addr, logn);
    for (int K = 0; K < logn; ++K)
        if (x.bit(K)) out.set(NoheString::sector_offset(K) + mu_prefix(x, K), true);
    if (with_bus && bus)
        out.set(NoheString::sector_offset(logn) + mu_prefix(x, logn), true);
    return out;
}

inline BitVec nohe_input_bits(std::uint64_t N, bool with_bus, std::uint32_t addr, int bus) {
    int logn = log2_exact(N);
    int L = logn + (with_bus ? 1 : 0);
    BitVec in((std::size_t(1) << L) - 1);
    for (int k = 0; k < logn; ++k)
        if ((addr >> k) & 1u) in.set(k, true);
    if (with_bus && bus) in.set(logn, true);
    return in;
}

inline EquivalenceReport verify_equivalence(std::uint64_t N, bool with_bus = false) {
    EquivalenceReport rep;
    auto seq = build_nohe_sequential(N, with_bus);
    auto par = build_nohe_parallel(N, with_bus).flatten();
    auto gad = expand_gadgets(seq);
    int logn = log2_exact(N);
    int buses = with_bus ? 2 : 1;
    for (std::uint64_t a = 0; a < N; ++a) {
        for (int bus = 0; bus < buses; ++bus) {
            BitVec in = nohe_input_bits(N, with_bus, std::uint32_t(a), bus);
            BitVec want = nohe_output_bits(N, with_bus, std::uint32_t(a), bus);
            BitVec o1 = run_classical(seq, in);
            BitVec o2 = run_classical(par, in);
            BitVec o3 = run_classical(gad, in);
            if (o1 != want || o2 != want || o3 != want) {
                rep.ok = false;
                std::ostringstream os;
                os << "mismatch at N=" << N << " x=" << a << " bus=" << bus
                   << " want=" << want.str() << " seq=" << o1.str()
                   << " par=" << o2.str() << " gadget=" << o3.str();
                rep.detail = os.str();
                return rep;
            }
        }
    }
    // all-basis-input agreement between the two orderings (small N only)
    if (N <= 16 && !with_bus) {
        std::size_t wires = N - 1;
        for (std::uint64_t b = 0; b < (1ULL << wires); ++b) {
            BitVec in = BitVec::from_uint(b, wires);
            if (run_classical(seq, in) != run_classical(par, in)) {
                rep.ok = false;
                rep.detail = "ordering mismatch on basis input " + std::to_string(b);
                return rep;
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Line-oriented circuit export: one gate per line (KIND q0 q1 [q2]),
// layer separators `---`.

inline std::string export_text(const Circuit& c) {
    std::ostringstream os;
    for (const auto& g : c.gates) {
        os << gate_name(g.kind);
        for (int i = 0; i < g.arity(); ++i) os << ' ' << g.q[i];
        os << '\n';
    }
    return os.str();
}

inline std::string export_text(const LayeredCircuit& lc) {
    std::ostringstream os;
    for (std::size_t t = 0; t < lc.layers.size(); ++t) {
        if (t) os << "---\n";
        for (const auto& g : lc.layers[t]) {
            os << gate_name(g.kind);
            for (int i = 0; i < g.arity(); ++i) os << ' ' << g.q[i];
            os << '\n';
        }
    }
    return os.str();
}

} // namespace qramsim

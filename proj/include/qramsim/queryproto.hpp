#pragma once

// The Clifford query pipeline: resource states Phi^(1), Phi^(2) and their
// contraction Phi, gate teleportation, adaptive loading, the
// measurement-based NOHE inversion with Pauli-frame decoding, and
// end-to-end query execution at small N.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qramsim/circuit.hpp"
#include "qramsim/cliffordlab.hpp"
#include "qramsim/densesim.hpp"
#include "qramsim/encoding.hpp"

namespace qramsim {

// ---------------------------------------------------------------------------
// Gadget schedule of U_NOHE^{(2N)} (or U^{(N)} without bus), in the order
// the inversion consumes them: reverse circuit layer, stable within a
// layer. Wires refer to the 2^L-1 circuit wires; sector starts (wire
// 2^K - 1) are never gadget second-targets and survive as the output
// register F.

struct GadgetWires {
    int a = 0, b = 0, c = 0; // control, first target, second target
    int round = 0;           // inversion round (0 first)
};

struct NoheSchedule {
    std::uint64_t N = 0;
    bool with_bus = true;
    int sectors = 0;                 // L
    int wires = 0;                   // 2^L - 1
    std::vector<GadgetWires> gadgets; // inversion order
    std::vector<int> f_wires;        // sector starts, K ascending (bus last when present)
    std::vector<Gate> swap_gates;    // forward swap stage, application order
    int rounds = 0;

    Circuit forward_circuit() const { // U_NOHE as Fredkin gates
        Circuit c;
        c.qubit_count = wires;
        for (const auto& g : swap_gates) c.gates.push_back(g);
        for (auto it = gadgets.rbegin(); it != gadgets.rend(); ++it)
            c.gates.emplace_back(GateKind::Fredkin, it->a, it->b, it->c);
        return c;
    }
};

inline NoheSchedule nohe_schedule(std::uint64_t N, bool with_bus) {
    NoheSchedule sch;
    sch.N = N;
    sch.with_bus = with_bus;
    sch.sectors = detail::nohe_sectors(N, with_bus);
    sch.wires = (1 << sch.sectors) - 1;
    auto lc = build_nohe_parallel(N, with_bus);
    for (int t = 0; t < lc.swap_layer_count; ++t)
        for (const auto& g : lc.layers[t]) sch.swap_gates.push_back(g);
    int rounds = 0;
    for (int t = int(lc.layers.size()) - 1; t >= lc.swap_layer_count; --t) {
        for (const auto& g : lc.layers[t])
            sch.gadgets.push_back(GadgetWires{g.q[0], g.q[1], g.q[2], rounds});
        ++rounds;
    }
    sch.rounds = rounds;
    for (int K = 0; K < sch.sectors; ++K) sch.f_wires.push_back((1 << K) - 1);
    return sch;
}

// ---------------------------------------------------------------------------
// Qubit index tracking across measure-and-drop operations.

class QubitTracker {
  public:
    explicit QubitTracker(int n) : pos_(n) { std::iota(pos_.begin(), pos_.end(), 0); }
    int pos(int id) const {
        if (pos_[id] < 0) throw std::logic_error("QubitTracker: qubit already dropped");
        return pos_[id];
    }
    void drop(int id) {
        int p = pos_[id];
        pos_[id] = -1;
        for (auto& q : pos_)
            if (q > p) --q;
    }
    int append() {
        int id = int(pos_.size());
        int mx = -1;
        for (int q : pos_) mx = std::max(mx, q);
        pos_.push_back(mx + 1);
        return id;
    }

  private:
    std::vector<int> pos_;
};

inline void append_cluster_pair(DenseState& s) {
    DenseState pair = bell_state(0, 0); // (1/2) sum (-)^{ij} |i,j>
    s = kron(s, pair);
}

// ---------------------------------------------------------------------------
// Phi^(1) = (1/N) sum_{y,z} (-)^{y.z} |y>_I (x) |NOHE(z,+)>_D, built from
// logN cluster-form Bell pairs and the V = U^{(2N)} H_bus circuit.
// Qubit order: I = [0, logN), D = [logN, logN + 2N-1).

struct Phi1State {
    std::uint64_t N = 0;
    int logn = 0;
    DenseState state;
    int i_index(int k) const { return k; }
    int d_index(int w) const { return logn + w; }
};

inline Phi1State build_phi1(std::uint64_t N) {
    Phi1State phi;
    phi.N = N;
    phi.logn = log2_exact(N);
    NoheSchedule sch = nohe_schedule(N, true);
    int total = phi.logn + sch.wires;
    DenseState s(total);
    for (int k = 0; k < phi.logn; ++k) {
        apply_h(s, k);
        apply_h(s, phi.logn + k);
        apply_cz(s, k, phi.logn + k);
    }
    apply_h(s, phi.logn + phi.logn); // bus wire of the D block
    Circuit fwd = sch.forward_circuit();
    for (const auto& g : fwd.gates) {
        Gate gg = g;
        for (int i = 0; i < gg.arity(); ++i) gg.q[i] += phi.logn;
        apply_gate(s, gg);
    }
    phi.state = std::move(s);
    return phi;
}

// Gate teleportation of V P_m: Bell-measure register k against I_k; the
// unmeasured D block is left in V P_m |psi, 0> with P_m = X^b Z^a.
struct TeleportResult {
    std::vector<int> a, b; // a from the register side, b from the RS side
    DenseState state;      // 2N-1 qubits
};

inline TeleportResult gate_teleport(const DenseState& psi, const Phi1State& phi1, Rng* rng,
                                    const std::vector<BellOutcome>* forced = nullptr) {
    if (psi.n != phi1.logn) throw std::invalid_argument("gate_teleport: register size mismatch");
    DenseState s = kron(phi1.state, psi);
    int base = phi1.state.n;
    QubitTracker trk(s.n);
    TeleportResult out;
    for (int k = 0; k < phi1.logn; ++k) {
        int qr = trk.pos(base + k), qi = trk.pos(phi1.i_index(k));
        BellOutcome m;
        if (forced)
            m = bell_measure_drop(s, qr, qi, nullptr, (*forced)[k].a, (*forced)[k].b);
        else
            m = bell_measure_drop(s, qr, qi, rng);
        trk.drop(base + k);
        trk.drop(phi1.i_index(k));
        out.a.push_back(m.a);
        out.b.push_back(m.b);
    }
    out.state = std::move(s);
    return out;
}

// Dense reference for V P_m |psi, 0>.
inline DenseState v_pm_reference(std::uint64_t N, const DenseState& psi,
                                 const std::vector<int>& a, const std::vector<int>& b) {
    int logn = log2_exact(N);
    NoheSchedule sch = nohe_schedule(N, true);
    DenseState s = kron(psi, DenseState(sch.wires - logn));
    for (int k = 0; k < logn; ++k)
        if (a[k]) apply_z(s, k);
    for (int k = 0; k < logn; ++k)
        if (b[k]) apply_x(s, k);
    apply_h(s, logn);
    apply_circuit(s, sch.forward_circuit());
    return s;
}

// ---------------------------------------------------------------------------
// Adaptive loading: Z on L_l exactly when load_bits(D, b)_l = 1.

inline std::vector<int> adaptive_load(const Dataset& D, const std::vector<int>& b) {
    Dataset B = load_bits(D, b);
    std::vector<int> zs;
    for (std::uint64_t l = 0; l < B.n; ++l)
        if (B.bit(l)) zs.push_back(int(l));
    return zs;
}

// ---------------------------------------------------------------------------
// Single-gadget inversion G = sum |i, j^k><i,j,k| on (qi, qj, qk), via a
// fresh cluster pair, an X measurement (s0) and basis-adaptive ancilla
// measurements; byproduct Z's applied immediately. The input must lie in
// the gadget image for the s0 = 1 branch to be phase-consistent.

struct GadgetOutcome {
    int s0 = 0, alpha = 0, beta = 0;
};

inline GadgetOutcome invert_gadget(DenseState& s, int qi, int qj, int qk, Rng* rng,
                                   const GadgetOutcome* forced = nullptr) {
    int p1 = s.n, p2 = s.n + 1;
    append_cluster_pair(s);
    apply_cnot(s, qk, qj);
    apply_cz(s, p1, qi);
    apply_cz(s, p2, qj);
    GadgetOutcome o;
    if (forced) {
        o = *forced;
        measure_drop(s, qk, 'X', nullptr, o.s0);
    } else {
        o.s0 = measure_drop(s, qk, 'X', rng).bit();
    }
    char basis = o.s0 ? 'X' : 'Z';
    // after dropping qk the pair sits at (n-2, n-1)
    if (forced) {
        measure_drop(s, s.n - 2, basis, nullptr, o.alpha);
        measure_drop(s, s.n - 1, basis, nullptr, o.beta);
    } else {
        o.alpha = measure_drop(s, s.n - 2, basis, rng).bit();
        o.beta = measure_drop(s, s.n - 1, basis, rng).bit();
    }
    int za = o.s0 ? o.beta : o.alpha;
    int zb = o.s0 ? o.alpha : o.beta;
    int qjn = qj > qk ? qj - 1 : qj;
    int qin = qi > qk ? qi - 1 : qi;
    if (za) apply_z(s, qin);
    if (zb) apply_z(s, qjn);
    return o;
}

// ---------------------------------------------------------------------------
// Full NOHE inversion. `adaptive` interleaves the gadget protocol;
// `frame` runs all unitaries and raw X measurements first, then decodes
// ancilla measurements with a Z frame. Output register: the sector-start
// wires in ascending K (bus last when present); the byproduct frame is
// discharged there.

enum class InversionMode { adaptive, frame };

struct InversionTranscript {
    std::vector<int> s0;             // raw X outcomes per gadget
    std::vector<int> s0_effective;   // frame-corrected s0 per gadget
    std::vector<char> basis;         // ancilla basis per gadget
    std::vector<int> alpha, beta;    // ancilla outcomes
    std::vector<int> final_frame;    // residual Z frame on the output wires
    int rounds = 0;
};

inline DenseState invert_nohe(const DenseState& input, std::uint64_t N, bool with_bus, Rng& rng,
                              InversionMode mode, InversionTranscript* tr = nullptr) {
    NoheSchedule sch = nohe_schedule(N, with_bus);
    if (input.n != sch.wires) throw std::invalid_argument("invert_nohe: wrong register size");
    DenseState s = input;
    InversionTranscript local;
    InversionTranscript& t = tr ? *tr : local;
    t.rounds = sch.rounds;
    const int G = int(sch.gadgets.size());
    t.s0.assign(G, 0);
    t.s0_effective.assign(G, 0);
    t.basis.assign(G, 'Z');
    t.alpha.assign(G, 0);
    t.beta.assign(G, 0);

    if (mode == InversionMode::adaptive) {
        QubitTracker trk(s.n);
        for (int g = 0; g < G; ++g) {
            const auto& gw = sch.gadgets[g];
            int qi = trk.pos(gw.a), qj = trk.pos(gw.b), qk = trk.pos(gw.c);
            GadgetOutcome o = invert_gadget(s, qi, qj, qk, &rng);
            trk.drop(gw.c);
            t.s0[g] = t.s0_effective[g] = o.s0;
            t.basis[g] = o.s0 ? 'X' : 'Z';
            t.alpha[g] = o.alpha;
            t.beta[g] = o.beta;
        }
        // surviving wires are the sector starts; reorder to F convention
        QubitTracker chk = trk; // positions of f wires
        std::vector<int> keep;
        for (int w : sch.f_wires) keep.push_back(trk.pos(w));
        DenseState out = permute_qubits(s, keep);
        return out;
    }

    // frame mode: unitaries first (gadget order), with all ancilla pairs
    // appended upfront
    QubitTracker trk(s.n);
    std::vector<std::pair<int, int>> pairs(G);
    for (int g = 0; g < G; ++g) {
        pairs[g].first = trk.append();
        pairs[g].second = trk.append();
        append_cluster_pair(s);
    }
    for (int g = 0; g < G; ++g) {
        const auto& gw = sch.gadgets[g];
        apply_cnot(s, trk.pos(gw.c), trk.pos(gw.b));
        apply_cz(s, trk.pos(pairs[g].first), trk.pos(gw.a));
        apply_cz(s, trk.pos(pairs[g].second), trk.pos(gw.b));
    }
    for (int g = 0; g < G; ++g) {
        const auto& gw = sch.gadgets[g];
        t.s0[g] = measure_drop(s, trk.pos(gw.c), 'X', &rng).bit();
        trk.drop(gw.c);
    }
    std::vector<char> frame(sch.wires, 0);
    for (int g = 0; g < G; ++g) {
        const auto& gw = sch.gadgets[g];
        frame[gw.c] ^= frame[gw.b]; // the gadget CNOT spreads target-Z onto the control
        int eff = t.s0[g] ^ frame[gw.c];
        t.s0_effective[g] = eff;
        char basis = eff ? 'X' : 'Z';
        t.basis[g] = basis;
        t.alpha[g] = measure_drop(s, trk.pos(pairs[g].first), basis, &rng).bit();
        trk.drop(pairs[g].first);
        t.beta[g] = measure_drop(s, trk.pos(pairs[g].second), basis, &rng).bit();
        trk.drop(pairs[g].second);
        frame[gw.a] ^= eff ? t.beta[g] : t.alpha[g];
        frame[gw.b] ^= eff ? t.alpha[g] : t.beta[g];
    }
    for (int w : sch.f_wires) {
        t.final_frame.push_back(frame[w]);
        if (frame[w]) apply_z(s, trk.pos(w));
    }
    std::vector<int> keep;
    for (int w : sch.f_wires) keep.push_back(trk.pos(w));
    return permute_qubits(s, keep);
}

// ---------------------------------------------------------------------------
// Phi^(2): 2N-1 cluster pairs with one half pushed through the C_NOHE
// unitaries (gadget CNOT first, then the ancilla CZs, matching the
// inversion equations). Register layout before any measurement:
//   u wires [0, W), d' wires [W, 2W), ancilla pairs after.

struct Phi2State {
    std::uint64_t N = 0;
    NoheSchedule sch;
    DenseState state;         // all wires live; c3 wires not yet measured
    std::vector<int> s0prep;  // filled by measure_c3(); empty until then
    int u_index(int w) const { return w; }
    int dprime_index(int w) const { return sch.wires + w; }
    int pair_index(int g, int which) const { return 2 * sch.wires + 2 * g + which; }
    int total_qubits() const { return 2 * sch.wires + 2 * int(sch.gadgets.size()); }
};

// C_NOHE unitary part as a circuit over the Phi2 register.
inline Circuit cnohe_unitaries(const Phi2State& phi2) {
    Circuit c;
    c.qubit_count = phi2.total_qubits();
    for (std::size_t g = 0; g < phi2.sch.gadgets.size(); ++g) {
        const auto& gw = phi2.sch.gadgets[g];
        c.gates.emplace_back(GateKind::CNOT, phi2.u_index(gw.c), phi2.u_index(gw.b));
        c.gates.emplace_back(GateKind::CZ, phi2.pair_index(int(g), 0), phi2.u_index(gw.a));
        c.gates.emplace_back(GateKind::CZ, phi2.pair_index(int(g), 1), phi2.u_index(gw.b));
    }
    return c;
}

inline Phi2State build_phi2(std::uint64_t N) {
    Phi2State phi;
    phi.N = N;
    phi.sch = nohe_schedule(N, true);
    const int W = phi.sch.wires;
    DenseState s(phi.total_qubits());
    for (int w = 0; w < W; ++w) {
        apply_h(s, phi.u_index(w));
        apply_h(s, phi.dprime_index(w));
        apply_cz(s, phi.u_index(w), phi.dprime_index(w));
    }
    for (std::size_t g = 0; g < phi.sch.gadgets.size(); ++g) {
        apply_h(s, phi.pair_index(int(g), 0));
        apply_h(s, phi.pair_index(int(g), 1));
        apply_cz(s, phi.pair_index(int(g), 0), phi.pair_index(int(g), 1));
    }
    phi.state = std::move(s);
    apply_circuit(phi.state, cnohe_unitaries(phi));
    return phi;
}

// Stabilizer-engine build of the same state.
inline StabilizerTableau build_phi2_tableau(std::uint64_t N) {
    Phi2State phi;
    phi.N = N;
    phi.sch = nohe_schedule(N, true);
    StabilizerTableau tab(phi.total_qubits());
    const int W = phi.sch.wires;
    for (int w = 0; w < W; ++w) {
        tab.apply(Gate(GateKind::H, phi.u_index(w)));
        tab.apply(Gate(GateKind::H, phi.dprime_index(w)));
        tab.apply(Gate(GateKind::CZ, phi.u_index(w), phi.dprime_index(w)));
    }
    for (std::size_t g = 0; g < phi.sch.gadgets.size(); ++g) {
        tab.apply(Gate(GateKind::H, phi.pair_index(int(g), 0)));
        tab.apply(Gate(GateKind::H, phi.pair_index(int(g), 1)));
        tab.apply(Gate(GateKind::CZ, phi.pair_index(int(g), 0), phi.pair_index(int(g), 1)));
    }
    tab.apply(cnohe_unitaries(phi));
    return tab;
}

// ---------------------------------------------------------------------------
// The assembled resource state Phi on |A| = 5N-3 qubits.
// Canonical qubit order: I[logN], L[N], ancilla pairs P[2 per gadget,
// inversion order], F[sector starts, bus last].

enum class PhiMode { postselect, frame };

struct PhiLayout {
    std::uint64_t N = 0;
    int logn = 0;
    int gadget_count = 0;
    int i_index(int k) const { return k; }
    int l_index(int l) const { return logn + l; }
    int p_index(int g, int which) const { return logn + int(N) + 2 * g + which; }
    int f_index(int K) const { return logn + int(N) + 2 * gadget_count + K; }
    int bus_index() const { return f_index(logn); }
    int total() const { return 5 * int(N) - 3; }
};

struct PhiResource {
    PhiLayout layout;
    NoheSchedule sch;
    DenseState state;
    std::vector<int> s0prep; // effective C_NOHE X outcomes, per gadget
};

// Assemble Phi = B[Phi1 (x) Phi2]. In postselect mode every contraction
// outcome is forced to +1. In frame mode the contraction outcomes are
// sampled and the deterministic Pauli correction is computed by
// conjugating the byproducts through C_NOHE; components landing on
// already-measured c3 wires flip the recorded s0prep bits instead.
//
// measure_c3_late keeps the c3 wires alive until after the correction
// (byte-exact canonical Phi for any outcomes) at the cost of a larger
// transient register; the default measures them during the Phi2 stage.
inline PhiResource build_phi(std::uint64_t N, PhiMode mode, Rng& rng, bool measure_c3_late = false,
                             const std::vector<int>* forced_s0prep = nullptr) {
    Phi2State phi2 = build_phi2(N);
    const NoheSchedule sch = phi2.sch;
    const int W = sch.wires;
    const int G = int(sch.gadgets.size());
    const int logn = log2_exact(N);

    std::vector<int> s0prep(G, 0);
    QubitTracker trk(phi2.total_qubits() + logn + W); // phi2 wires + phi1 (I, D)
    const int phi1_i0 = phi2.total_qubits();
    const int phi1_d0 = phi1_i0 + logn;

    DenseState s;
    if (!measure_c3_late) {
        // measure the pushed second-target wires now to keep the join small
        for (int g = 0; g < G; ++g) {
            int wire = sch.gadgets[g].c;
            int bit = forced_s0prep ? (*forced_s0prep)[g] : 0;
            measure_drop(phi2.state, trk.pos(phi2.u_index(wire)), 'X', nullptr, bit);
            trk.drop(phi2.u_index(wire));
            s0prep[g] = bit;
        }
    }
    {
        Phi1State phi1 = build_phi1(N);
        s = kron(phi2.state, phi1.state);
        phi2.state = DenseState(0); // release
    }

    // contraction outcomes
    std::vector<BellOutcome> bm(N - 1);
    std::vector<int> cx(N, 0);
    std::uniform_int_distribution<int> coin(0, 1);
    if (mode == PhiMode::frame)
        for (auto& o : bm) { o.a = coin(rng); o.b = coin(rng); }
    if (mode == PhiMode::frame)
        for (auto& c : cx) c = coin(rng);

    for (std::uint64_t al = 0; al + 1 < N; ++al) {
        int qd = trk.pos(phi1_d0 + int(al));
        int qdp = trk.pos(phi2.dprime_index(int(al)));
        bell_measure_drop(s, qd, qdp, nullptr, bm[al].a, bm[al].b);
        trk.drop(phi1_d0 + int(al));
        trk.drop(phi2.dprime_index(int(al)));
    }
    for (std::uint64_t l = 0; l < N; ++l) {
        int w = int(N - 1 + l);
        int qd = trk.pos(phi1_d0 + w);
        int qdp = trk.pos(phi2.dprime_index(w));
        apply_cz(s, qd, qdp);
        measure_drop(s, qdp, 'X', nullptr, cx[l]);
        trk.drop(phi2.dprime_index(w));
    }

    if (mode == PhiMode::frame) {
        // byproduct on the virtual C_NOHE inputs: X^b Z^a per BM pair,
        // X^c per kept-L pair
        PauliString e(phi2.total_qubits());
        for (std::uint64_t al = 0; al + 1 < N; ++al) {
            if (bm[al].b) e.x.set(phi2.u_index(int(al)), true);
            if (bm[al].a) e.z.set(phi2.u_index(int(al)), true);
        }
        for (std::uint64_t l = 0; l < N; ++l)
            if (cx[l]) e.x.set(phi2.u_index(int(N - 1 + l)), true);
        Circuit cu = cnohe_unitaries(phi2);
        for (const auto& g : cu.gates) e.conj_gate(g);
        // discharge: physical Pauli on live wires, s0prep flips on the
        // measured c3 wires
        std::vector<char> is_c3(phi2.total_qubits(), 0);
        std::vector<int> c3_gadget(phi2.total_qubits(), -1);
        for (int g = 0; g < G; ++g) {
            is_c3[phi2.u_index(sch.gadgets[g].c)] = 1;
            c3_gadget[phi2.u_index(sch.gadgets[g].c)] = g;
        }
        for (int q = 0; q < phi2.total_qubits(); ++q) {
            bool xb = e.x.get(q), zb = e.z.get(q);
            if (!xb && !zb) continue;
            if (is_c3[q] && !measure_c3_late) {
                if (zb) s0prep[c3_gadget[q]] ^= 1;
                continue; // an X on an X-measured wire is a global sign
            }
            if (xb) apply_x(s, trk.pos(q));
            if (zb) apply_z(s, trk.pos(q));
        }
    }

    if (measure_c3_late) {
        for (int g = 0; g < G; ++g) {
            int wire = sch.gadgets[g].c;
            int bit = forced_s0prep ? (*forced_s0prep)[g] : 0;
            measure_drop(s, trk.pos(phi2.u_index(wire)), 'X', nullptr, bit);
            trk.drop(phi2.u_index(wire));
            s0prep[g] = bit;
        }
    }

    // permute into canonical order
    PhiResource out;
    out.layout.N = N;
    out.layout.logn = logn;
    out.layout.gadget_count = G;
    out.sch = sch;
    out.s0prep = std::move(s0prep);
    std::vector<int> order;
    for (int k = 0; k < logn; ++k) order.push_back(trk.pos(phi1_i0 + k));
    for (std::uint64_t l = 0; l < N; ++l) order.push_back(trk.pos(phi1_d0 + int(N - 1 + l)));
    for (int g = 0; g < G; ++g) {
        order.push_back(trk.pos(phi2.pair_index(g, 0)));
        order.push_back(trk.pos(phi2.pair_index(g, 1)));
    }
    for (int w : sch.f_wires) order.push_back(trk.pos(phi2.u_index(w)));
    if (int(order.size()) != out.layout.total())
        throw std::logic_error("build_phi: register bookkeeping error");
    out.state = permute_qubits(s, order);
    return out;
}

// ---------------------------------------------------------------------------
// End-to-end query.

struct QueryTranscript {
    std::vector<int> a, b;          // GT outcomes m = (a, b)
    std::vector<int> load_targets;  // L qubits that received a Z
    std::vector<int> M;             // X outcomes on L
    std::vector<int> s0prep;        // resource-state C_NOHE outcomes
    std::vector<int> s0_effective;  // frame-corrected s0 per gadget
    std::vector<char> basis;        // SQPM basis per gadget
    std::vector<int> alpha, beta;   // SQPM outcomes per gadget
    std::vector<int> final_frame;   // Z frame discharged on F
    int rounds = 0;
};

// Consume the resource state to answer a query; the result approximates
// |psi_D> = sum_x psi_x |x>|D_x> on logN+1 output qubits.
inline DenseState run_query(const DenseState& psi, const Dataset& D, const PhiResource& phi,
                            Rng& rng, QueryTranscript* tr = nullptr) {
    const auto& lay = phi.layout;
    const std::uint64_t N = lay.N;
    const int logn = lay.logn;
    if (psi.n != logn || D.n != N) throw std::invalid_argument("run_query: size mismatch");
    QueryTranscript local;
    QueryTranscript& t = tr ? *tr : local;
    t.s0prep = phi.s0prep;
    t.rounds = phi.sch.rounds;

    DenseState s = kron(phi.state, psi);
    QubitTracker trk(s.n);
    const int r0 = lay.total();

    // (i) gate teleportation
    for (int k = 0; k < logn; ++k) {
        BellOutcome m = bell_measure_drop(s, trk.pos(r0 + k), trk.pos(lay.i_index(k)), &rng);
        trk.drop(r0 + k);
        trk.drop(lay.i_index(k));
        t.a.push_back(m.a);
        t.b.push_back(m.b);
    }

    // (ii) adaptive loading on L
    t.load_targets = adaptive_load(D, t.b);
    for (int l : t.load_targets) apply_z(s, trk.pos(lay.l_index(l)));

    // (iii) X measurements on L, then the SQPM cascade on P
    std::vector<char> frame(phi.sch.wires, 0);
    t.M.assign(N, 0);
    for (std::uint64_t l = 0; l < N; ++l) {
        t.M[l] = measure_drop(s, trk.pos(lay.l_index(int(l))), 'X', &rng).bit();
        trk.drop(lay.l_index(int(l)));
        frame[N - 1 + l] = char(t.M[l]);
    }
    const int G = lay.gadget_count;
    t.s0_effective.assign(G, 0);
    t.basis.assign(G, 'Z');
    t.alpha.assign(G, 0);
    t.beta.assign(G, 0);
    for (int g = 0; g < G; ++g) {
        const auto& gw = phi.sch.gadgets[g];
        frame[gw.c] ^= frame[gw.b];
        int eff = phi.s0prep[g] ^ frame[gw.c];
        t.s0_effective[g] = eff;
        char basis = eff ? 'X' : 'Z';
        t.basis[g] = basis;
        t.alpha[g] = measure_drop(s, trk.pos(lay.p_index(g, 0)), basis, &rng).bit();
        trk.drop(lay.p_index(g, 0));
        t.beta[g] = measure_drop(s, trk.pos(lay.p_index(g, 1)), basis, &rng).bit();
        trk.drop(lay.p_index(g, 1));
        frame[gw.a] ^= eff ? t.beta[g] : t.alpha[g];
        frame[gw.b] ^= eff ? t.alpha[g] : t.beta[g];
    }

    // final Pauli correction: frame on F, then P_m^{-1} on the address
    // outputs and H on the bus
    for (int K = 0; K <= logn; ++K) {
        int w = phi.sch.f_wires[K];
        t.final_frame.push_back(frame[w]);
        if (frame[w]) apply_z(s, trk.pos(lay.f_index(K)));
    }
    for (int k = 0; k < logn; ++k) {
        if (t.b[k]) apply_x(s, trk.pos(lay.f_index(k)));
        if (t.a[k]) apply_z(s, trk.pos(lay.f_index(k)));
    }
    apply_h(s, trk.pos(lay.bus_index()));

    std::vector<int> keep;
    for (int K = 0; K <= logn; ++K) keep.push_back(trk.pos(lay.f_index(K)));
    return permute_qubits(s, keep);
}

// ---------------------------------------------------------------------------
// Unitary reference pipeline V^{-1} W_D V (the oracle run_query is checked
// against). Output: logN + 1 qubits, |x>|D_x| semantics.

inline DenseState reference_query(const DenseState& psi, const Dataset& D) {
    std::uint64_t N = D.n;
    int logn = log2_exact(N);
    if (psi.n != logn) throw std::invalid_argument("reference_query: size mismatch");
    NoheSchedule sch = nohe_schedule(N, true);
    Circuit fwd = sch.forward_circuit();
    DenseState s = kron(psi, DenseState(sch.wires - logn));
    apply_h(s, logn);
    apply_circuit(s, fwd);
    for (std::uint64_t l = 0; l < N; ++l)
        if (D.bit(l)) apply_z(s, int(N - 1 + l));
    apply_circuit_reversed(s, fwd);
    apply_h(s, logn);
    std::vector<int> keep(logn + 1);
    std::iota(keep.begin(), keep.end(), 0);
    return extract_qubits(s, keep);
}

// Ideal answer sum_x psi_x |x>|D_x>.
inline DenseState ideal_answer(const DenseState& psi, const Dataset& D) {
    int logn = psi.n;
    DenseState out(logn + 1);
    out.amp.assign(out.dim(), 0.0);
    for (std::uint64_t x = 0; x < psi.dim(); ++x)
        out.amp[x | (std::uint64_t(D.bit(x)) << logn)] = psi.amp[x];
    return out;
}

} // namespace qramsim

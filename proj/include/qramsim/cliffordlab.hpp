#pragma once

// Pauli algebra, stabilizer tableaus, Clifford-hierarchy membership and
// the QRAM conjugation identities.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qramsim/bitvec.hpp"
#include "qramsim/densesim.hpp"
#include "qramsim/encoding.hpp"

namespace qramsim {

// ---------------------------------------------------------------------------
// Small dense complex matrices (operators on <= 4 qubits).

struct Mat {
    int d = 1;
    std::vector<cplx> a;

    Mat() : a(1, 1.0) {}
    explicit Mat(int dim) : d(dim), a(std::size_t(dim) * dim, 0.0) {}
    static Mat identity(int dim) {
        Mat m(dim);
        for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
        return m;
    }
    cplx& at(int r, int c) { return a[std::size_t(r) * d + c]; }
    const cplx& at(int r, int c) const { return a[std::size_t(r) * d + c]; }

    Mat operator*(const Mat& o) const {
        Mat out(d);
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) {
                cplx v = at(i, k);
                if (v == cplx(0.0)) continue;
                for (int j = 0; j < d; ++j) out.at(i, j) += v * o.at(k, j);
            }
        return out;
    }
    Mat dagger() const {
        Mat out(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out.at(i, j) = std::conj(at(j, i));
        return out;
    }
    Mat operator-(const Mat& o) const {
        Mat out(d);
        for (std::size_t i = 0; i < a.size(); ++i) out.a[i] = a[i] - o.a[i];
        return out;
    }
    double max_abs_diff(const Mat& o) const {
        double m = 0;
        for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - o.a[i]));
        return m;
    }
    bool is_unitary(double tol = 1e-9) const {
        return ((*this) * dagger()).max_abs_diff(identity(d)) < tol;
    }
};

// i^phase * X^xmask Z^zmask on n qubits: column x maps to row x ^ xmask
// with amplitude i^phase (-1)^{zmask.x}.
inline Mat pauli_dense(int n, std::uint32_t xmask, std::uint32_t zmask, int phase = 0) {
    Mat m(1 << n);
    static const cplx iph[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    for (std::uint32_t x = 0; x < (1u << n); ++x) {
        int par = std::popcount(zmask & x) & 1;
        m.at(int(x ^ xmask), int(x)) = iph[phase] * (par ? -1.0 : 1.0);
    }
    return m;
}

// Recognize c * X^a Z^b with c in {+1, -1, +i, -i}.
inline bool is_pauli_matrix(const Mat& m, double tol = 1e-8) {
    const int d = m.d;
    int row0 = -1;
    for (int r = 0; r < d; ++r)
        if (std::abs(m.at(r, 0)) > tol) {
            if (row0 >= 0) return false;
            row0 = r;
        }
    if (row0 < 0) return false;
    const std::uint32_t a = std::uint32_t(row0);
    const cplx c = m.at(row0, 0);
    bool fourth_root = false;
    for (cplx p : {cplx(1, 0), cplx(-1, 0), cplx(0, 1), cplx(0, -1)})
        if (std::abs(c - p) < 1e-6) fourth_root = true;
    if (!fourth_root) return false;
    std::uint32_t b = 0;
    for (std::uint32_t q = 1; q < std::uint32_t(d); q <<= 1) {
        cplx v = m.at(int(q ^ a), int(q));
        if (std::abs(v - c) < tol) continue;
        if (std::abs(v + c) < tol) {
            b |= q;
            continue;
        }
        return false;
    }
    for (std::uint32_t x = 0; x < std::uint32_t(d); ++x) {
        cplx want = c * ((std::popcount(b & x) & 1) ? -1.0 : 1.0);
        for (std::uint32_t r = 0; r < std::uint32_t(d); ++r) {
            cplx expect = (r == (x ^ a)) ? want : cplx(0.0);
            if (std::abs(m.at(int(r), int(x)) - expect) > tol) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Clifford hierarchy membership. Level 0 is the Pauli group; level K
// requires U P U^dag in C_{K-1} for every Pauli P. Generators suffice for
// K = 1, 2 because C_0 and C_1 are groups; from K = 3 on the full Pauli
// set is enumerated.

namespace detail {

inline Mat conjugate_by(const Mat& u, const Mat& udag, const Mat& p) { return u * p * udag; }

inline bool in_level(const Mat& u, int K) {
    if (K <= 0) return is_pauli_matrix(u);
    const int d = u.d;
    int n = 0;
    while ((1 << n) < d) ++n;
    Mat udag = u.dagger();
    if (K <= 2) {
        for (int q = 0; q < n; ++q) {
            if (!in_level(conjugate_by(u, udag, pauli_dense(n, 1u << q, 0)), K - 1)) return false;
            if (!in_level(conjugate_by(u, udag, pauli_dense(n, 0, 1u << q)), K - 1)) return false;
        }
        return true;
    }
    for (std::uint32_t xm = 0; xm < (1u << n); ++xm)
        for (std::uint32_t zm = 0; zm < (1u << n); ++zm) {
            if (!xm && !zm) continue;
            if (!in_level(conjugate_by(u, udag, pauli_dense(n, xm, zm)), K - 1)) return false;
        }
    return true;
}

} // namespace detail

struct HierarchyLevel {
    int level = -1;       // smallest K with U in C_K, when found
    bool above_kmax = false;
};

inline HierarchyLevel hierarchy_level(const Mat& u, int kmax) {
    if (u.d > 16 || kmax > 4) throw std::invalid_argument("hierarchy_level: capped at 4 qubits, kmax 4");
    if (!u.is_unitary()) throw std::invalid_argument("hierarchy_level: non-unitary input");
    for (int K = 0; K <= kmax; ++K)
        if (detail::in_level(u, K)) return HierarchyLevel{K, false};
    return HierarchyLevel{-1, true};
}

// ---------------------------------------------------------------------------
// Named operators.

inline Mat gate_h_mat() {
    Mat m(2);
    double r = 1.0 / std::sqrt(2.0);
    m.at(0, 0) = r; m.at(0, 1) = r; m.at(1, 0) = r; m.at(1, 1) = -r;
    return m;
}

// Multi-controlled phase C_nZ on n+1 qubits: -1 on the all-ones state.
inline Mat cnz_dense(int n) {
    Mat m = Mat::identity(1 << (n + 1));
    m.at(m.d - 1, m.d - 1) = -1.0;
    return m;
}

// Phase rotations exp(-i Z pi / 2^{n+1}): n = 0 gives -iZ up to phase
// (i.e. Z), n = 1 the S-type gate, n = 2 the T-type gate. The exponent is
// chosen so that the family sits at hierarchy level exactly n.
inline Mat t_family(int n) {
    Mat m(2);
    double th = M_PI / double(1 << (n + 1));
    m.at(0, 0) = std::exp(cplx(0, -th));
    m.at(1, 1) = std::exp(cplx(0, th));
    return m;
}

// U_QRAM for memory D on logN + 1 qubits: |x, B> -> |x, B ^ D_x>. The bus
// is the top qubit.
inline Mat qram_dense(std::uint64_t N, const Dataset& D) {
    int logn = log2_exact(N);
    if (N > 8) throw std::invalid_argument("qram_dense: N capped at 8");
    Mat m(1 << (logn + 1));
    for (std::uint32_t x = 0; x < N; ++x)
        for (std::uint32_t B = 0; B < 2; ++B) {
            std::uint32_t in = x | (B << logn);
            std::uint32_t out = x | ((B ^ (D.bit(x) ? 1u : 0u)) << logn);
            m.at(int(out), int(in)) = 1.0;
        }
    return m;
}

inline Dataset adversarial_dataset(std::uint64_t N) {
    Dataset D(N);
    for (std::uint64_t x = 0; x < N; ++x) D.set(x, x != N - 1);
    return D;
}

// U_QRAM Z_bus U_QRAM^{-1} = -Z_bus C_{logN-1}Z on the address qubits,
// for the adversarial memory (D_x = 0 iff x = 1...1).
inline bool conjugation_identity_check(std::uint64_t N, double tol = 1e-12) {
    int logn = log2_exact(N);
    Mat u = qram_dense(N, adversarial_dataset(N));
    Mat zbus = pauli_dense(logn + 1, 0, 1u << logn);
    Mat lhs = u * zbus * u; // U is an involution
    // rhs: -Z_bus (address-side multi-controlled Z)
    Mat rhs(1 << (logn + 1));
    for (std::uint32_t x = 0; x < N; ++x)
        for (std::uint32_t B = 0; B < 2; ++B) {
            std::uint32_t i = x | (B << logn);
            double s = (B ? -1.0 : 1.0) * ((x == N - 1) ? -1.0 : 1.0);
            rhs.at(int(i), int(i)) = -s;
        }
    return lhs.max_abs_diff(rhs) < tol;
}

// ---------------------------------------------------------------------------
// Symplectic Pauli strings and stabilizer tableaus.

struct PauliString {
    int n = 0;
    BitVec x, z;
    std::uint8_t phase = 0; // exponent of i: P = i^phase X^x Z^z

    PauliString() = default;
    explicit PauliString(int n_) : n(n_), x(n_), z(n_) {}

    static PauliString single(int n, int q, char kind) {
        PauliString p(n);
        if (kind == 'X') p.x.set(q, true);
        else if (kind == 'Z') p.z.set(q, true);
        else if (kind == 'Y') { p.x.set(q, true); p.z.set(q, true); p.phase = 1; }
        return p;
    }

    bool commutes(const PauliString& o) const {
        return !(x.and_parity(o.z) ^ z.and_parity(o.x));
    }

    PauliString operator*(const PauliString& o) const {
        PauliString r(n);
        r.phase = std::uint8_t((phase + o.phase + (z.and_parity(o.x) ? 2 : 0)) & 3);
        r.x = x; r.x.xor_with(o.x);
        r.z = z; r.z.xor_with(o.z);
        return r;
    }

    bool is_identity_string() const { return !x.any() && !z.any(); }

    // Conjugation by Clifford gates (g P g^dag).
    void conj_h(int q) {
        bool xb = x.get(q), zb = z.get(q);
        if (xb && zb) phase = std::uint8_t((phase + 2) & 3);
        x.set(q, zb);
        z.set(q, xb);
    }
    void conj_x(int q) {
        if (z.get(q)) phase = std::uint8_t((phase + 2) & 3);
    }
    void conj_z(int q) {
        if (x.get(q)) phase = std::uint8_t((phase + 2) & 3);
    }
    // In the i^phase X^x Z^z representation CNOT conjugation is
    // phase-free; CZ picks up a sign exactly when both X bits are set.
    void conj_cnot(int c, int t) {
        x.set(t, x.get(t) ^ x.get(c));
        z.set(c, z.get(c) ^ z.get(t));
    }
    void conj_cz(int a, int b) {
        bool xa = x.get(a), xb = x.get(b);
        if (xa && xb) phase = std::uint8_t((phase + 2) & 3);
        z.set(a, z.get(a) ^ xb);
        z.set(b, z.get(b) ^ xa);
    }
    void conj_swap(int a, int b) {
        bool xa = x.get(a), xb = x.get(b), za = z.get(a), zb = z.get(b);
        x.set(a, xb); x.set(b, xa);
        z.set(a, zb); z.set(b, za);
    }
    void conj_gate(const Gate& g) {
        switch (g.kind) {
            case GateKind::X: conj_x(g.q[0]); break;
            case GateKind::Z: conj_z(g.q[0]); break;
            case GateKind::H: conj_h(g.q[0]); break;
            case GateKind::CZ: conj_cz(g.q[0], g.q[1]); break;
            case GateKind::CNOT: conj_cnot(g.q[0], g.q[1]); break;
            case GateKind::SWAP: conj_swap(g.q[0], g.q[1]); break;
            default: throw std::invalid_argument("conj_gate: non-Clifford gate");
        }
    }

    void apply_to(DenseState& s) const {
        for (int q = 0; q < n; ++q)
            if (z.get(q)) apply_z(s, q);
        for (int q = 0; q < n; ++q)
            if (x.get(q)) apply_x(s, q);
        static const cplx iph[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        if (phase)
            for (auto& c : s.amp) c *= iph[phase];
    }
};

class StabilizerTableau {
  public:
    explicit StabilizerTableau(int n) : n_(n) {
        for (int q = 0; q < n; ++q) gens_.push_back(PauliString::single(n, q, 'Z'));
    }

    int n() const { return n_; }
    const std::vector<PauliString>& generators() const { return gens_; }

    void apply(const Gate& g) {
        for (auto& p : gens_) p.conj_gate(g);
    }
    void apply(const Circuit& c) {
        for (const auto& g : c.gates) apply(g);
    }

    // Measurement of a Hermitian Pauli observable (phase 0 or 2).
    MeasureResult measure(const PauliString& p, Rng* rng, int forced_value = 0) {
        if (p.phase & 1) throw std::invalid_argument("measure: non-Hermitian Pauli");
        int anti = -1;
        for (int i = 0; i < n_; ++i)
            if (!gens_[i].commutes(p)) { anti = i; break; }
        if (anti >= 0) {
            int value;
            if (forced_value != 0) value = forced_value;
            else {
                std::uniform_real_distribution<double> u(0.0, 1.0);
                value = (u(*rng) < 0.5) ? +1 : -1;
            }
            for (int i = anti + 1; i < n_; ++i)
                if (!gens_[i].commutes(p)) gens_[i] = gens_[i] * gens_[anti];
            PauliString repl = p;
            if (value < 0) repl.phase = std::uint8_t((repl.phase + 2) & 3);
            gens_[anti] = repl;
            return MeasureResult{value, 0.5};
        }
        // deterministic: express p as a product of generators
        int value = deterministic_value(p);
        if (forced_value != 0 && forced_value != value)
            throw std::runtime_error("measure: zero-probability branch");
        return MeasureResult{value, 1.0};
    }

    // Expectation of a Hermitian Pauli: +1/-1 when deterministic, 0 when random.
    int expectation(const PauliString& p) const {
        for (const auto& g : gens_)
            if (!g.commutes(p)) return 0;
        return deterministic_value(p);
    }

    // Dense statevector stabilized by the tableau (projector product on a
    // fixed seed vector), for cross-engine comparisons at small n.
    DenseState to_dense() const {
        if (n_ > 14) throw std::invalid_argument("to_dense: too many qubits");
        DenseState v(n_);
        Rng rng(0x9e3779b97f4a7c15ULL);
        v = haar_random_state(n_, rng);
        for (const auto& g : gens_) {
            DenseState gv = v;
            g.apply_to(gv);
            for (std::size_t i = 0; i < v.dim(); ++i) v.amp[i] = 0.5 * (v.amp[i] + gv.amp[i]);
        }
        double n2 = v.norm2();
        if (n2 < 1e-20) throw std::runtime_error("to_dense: projector annihilated seed vector");
        v.scale(1.0 / std::sqrt(n2));
        return v;
    }

  private:
    int deterministic_value(const PauliString& p) const {
        std::vector<PauliString> rows = gens_;
        PauliString r = p;
        // eliminate r's support with echelon pivots over the 2n coordinates
        std::vector<char> used(rows.size(), 0);
        for (int coord = 0; coord < 2 * n_; ++coord) {
            int q = coord >> 1;
            bool want_x = !(coord & 1);
            auto bit = [&](const PauliString& s) { return want_x ? s.x.get(q) : s.z.get(q); };
            int pivot = -1;
            for (std::size_t i = 0; i < rows.size(); ++i)
                if (!used[i] && bit(rows[i])) { pivot = int(i); break; }
            if (pivot < 0) continue;
            used[pivot] = 1;
            for (std::size_t i = 0; i < rows.size(); ++i)
                if (int(i) != pivot && !used[i] && bit(rows[i])) rows[i] = rows[i] * rows[pivot];
            if (bit(r)) r = r * rows[pivot];
        }
        if (r.x.any() || r.z.any())
            throw std::runtime_error("measure: observable not in the stabilizer group (impure state?)");
        if (r.phase == 0) return +1;
        if (r.phase == 2) return -1;
        throw std::logic_error("measure: inconsistent phase");
    }

    int n_;
    std::vector<PauliString> gens_;
};

// ---------------------------------------------------------------------------
// N=2 compact resource-state verification: the pre-measurement stabilizer
// list for Phi^(2), the X measurement on (paper) qubit 6, and the
// emerging linear graph state 1-4-7-8-5-2-3 after H on qubit 3.
//
// Register (0-based here = paper label - 1): 0,1,2 kept Bell halves;
// 3,4,5 pushed halves; 6,7 the gadget ancilla pair. The gadget order is
// CNOT then the ancilla CZs, the same order the inversion equations fix.
//
// Note on the printed list: its last two generators, X8 Z5 Z7 and
// X6 Z3 X5, anticommute (they share only qubit 5, with Z against X), so
// no state satisfies the list verbatim; one generator carries a misprint.
// The post-measurement linear chain pins the correction uniquely:
// X6 Z3 X5 Z8. The check below verifies the seven consistent printed
// generators, proves the misprint, and verifies the corrected generator
// plus the full chain.

namespace phi2_n2 {

inline Circuit preparation_circuit() {
    Circuit c;
    c.qubit_count = 8;
    auto pair = [&](int a, int b) {
        c.gates.emplace_back(GateKind::H, a);
        c.gates.emplace_back(GateKind::H, b);
        c.gates.emplace_back(GateKind::CZ, a, b);
    };
    pair(0, 3);
    pair(1, 4);
    pair(2, 5);
    pair(6, 7);
    c.gates.emplace_back(GateKind::CNOT, 5, 4);
    c.gates.emplace_back(GateKind::CZ, 6, 3);
    c.gates.emplace_back(GateKind::CZ, 7, 4);
    return c;
}

inline PauliString make_pauli8(std::initializer_list<std::pair<int, char>> ops) {
    PauliString p(8);
    for (auto [q, k] : ops) {
        if (k == 'X') p.x.set(q, true);
        else p.z.set(q, true);
    }
    return p;
}

// The Methods list translated to 0-based qubits, in print order.
inline std::vector<PauliString> printed_stabilizers() {
    return {
        make_pauli8({{0, 'X'}, {3, 'Z'}}),
        make_pauli8({{3, 'X'}, {0, 'Z'}, {6, 'Z'}}),
        make_pauli8({{4, 'X'}, {1, 'Z'}, {7, 'Z'}}),
        make_pauli8({{6, 'X'}, {3, 'Z'}, {7, 'Z'}}),
        make_pauli8({{7, 'X'}, {4, 'Z'}, {6, 'Z'}}),
        make_pauli8({{1, 'X'}, {4, 'Z'}, {5, 'Z'}}),
        make_pauli8({{2, 'X'}, {5, 'Z'}}),
        make_pauli8({{5, 'X'}, {2, 'Z'}, {4, 'X'}}),
    };
}

inline PauliString corrected_eighth() {
    return make_pauli8({{5, 'X'}, {2, 'Z'}, {4, 'X'}, {7, 'Z'}});
}

// Linear chain 1-4-7-8-5-2-3 (paper labels) after H_3; 0-based order
// 0-3-6-7-4-1-2.
inline std::vector<PauliString> linear_chain_stabilizers() {
    const int order[7] = {0, 3, 6, 7, 4, 1, 2};
    std::vector<PauliString> out;
    for (int i = 0; i < 7; ++i) {
        PauliString p(8);
        p.x.set(order[i], true);
        if (i > 0) p.z.set(order[i - 1], true);
        if (i < 6) p.z.set(order[i + 1], true);
        out.push_back(p);
    }
    return out;
}

} // namespace phi2_n2

struct Phi2GraphReport {
    bool printed_seven_ok = false;       // the seven consistent printed generators
    bool printed_list_inconsistent = false; // generators 5 and 8 of the print anticommute
    bool corrected_eighth_ok = false;
    bool post_chain_ok = false;
    bool dense_matches_tableau = false;
    bool ok() const {
        return printed_seven_ok && printed_list_inconsistent && corrected_eighth_ok &&
               post_chain_ok && dense_matches_tableau;
    }
};

inline Phi2GraphReport verify_phi2_linear_graph() {
    Phi2GraphReport rep;
    Circuit prep = phi2_n2::preparation_circuit();

    StabilizerTableau tab(8);
    tab.apply(prep);
    DenseState dense(8);
    apply_circuit(dense, prep);

    auto holds = [&](const PauliString& p) {
        if (tab.expectation(p) != +1) return false;
        DenseState t = dense;
        p.apply_to(t);
        return std::abs(inner(dense, t) - cplx(1.0)) < 1e-10;
    };

    auto printed = phi2_n2::printed_stabilizers();
    rep.printed_list_inconsistent = !printed[4].commutes(printed[7]);
    rep.printed_seven_ok = true;
    for (std::size_t i = 0; i < printed.size(); ++i) {
        if (i == 7) continue;
        if (!holds(printed[i])) rep.printed_seven_ok = false;
    }
    rep.corrected_eighth_ok = holds(phi2_n2::corrected_eighth());

    rep.dense_matches_tableau = fidelity(tab.to_dense(), dense) > 1.0 - 1e-10;

    // Measure X on qubit 5 (paper qubit 6); a -1 outcome is repaired by X
    // on qubit 2 (paper qubit 3). Then rotate qubit 2 with H.
    Rng rng(12345);
    auto m = tab.measure(PauliString::single(8, 5, 'X'), &rng);
    measure_pauli_forced(dense, 5, 'X', m.bit());
    if (m.value < 0) {
        tab.apply(Gate(GateKind::X, 2));
        apply_x(dense, 2);
    }
    tab.apply(Gate(GateKind::H, 2));
    apply_h(dense, 2);

    rep.post_chain_ok = true;
    for (const auto& p : phi2_n2::linear_chain_stabilizers())
        if (!holds(p)) rep.post_chain_ok = false;
    return rep;
}

} // namespace qramsim

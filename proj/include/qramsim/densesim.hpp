#pragma once

// Exact statevector engine for protocol verification at small qubit
// counts. Qubit 0 is the least significant amplitude index. Measurement
// helpers exist in two flavors: spec-style (measured qubits stay in
// place) and dropping (the measured qubit is contracted out, which keeps
// the large resource-state builds within memory).

#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "qramsim/circuit.hpp"

namespace qramsim {

using cplx = std::complex<double>;
using Rng = std::mt19937_64;

constexpr double kNormTol = 1e-12;

struct DenseState {
    int n = 0;
    std::vector<cplx> amp;

    DenseState() : amp(1, cplx(1.0, 0.0)) {}
    explicit DenseState(int n_) : n(n_), amp(std::size_t(1) << n_, cplx(0.0, 0.0)) {
        amp[0] = 1.0;
    }
    static DenseState basis(int n_, std::uint64_t idx) {
        DenseState s(n_);
        s.amp[0] = 0.0;
        s.amp[idx] = 1.0;
        return s;
    }
    std::size_t dim() const { return amp.size(); }
    double norm2() const {
        double a = 0;
        for (const auto& c : amp) a += std::norm(c);
        return a;
    }
    void scale(double f) {
        for (auto& c : amp) c *= f;
    }
    void normalize() {
        double n2 = norm2();
        if (n2 <= 0) throw std::runtime_error("normalize: zero state");
        scale(1.0 / std::sqrt(n2));
    }
};

inline cplx inner(const DenseState& a, const DenseState& b) {
    if (a.n != b.n) throw std::invalid_argument("inner: size mismatch");
    cplx v = 0;
    for (std::size_t i = 0; i < a.dim(); ++i) v += std::conj(a.amp[i]) * b.amp[i];
    return v;
}

inline double fidelity(const DenseState& a, const DenseState& b) {
    return std::norm(inner(a, b));
}

// Tensor product; qubits of `a` keep their indices, qubits of `b` move up
// by a.n.
inline DenseState kron(const DenseState& a, const DenseState& b) {
    DenseState out(a.n + b.n);
    out.amp.assign(out.dim(), 0.0);
    std::size_t da = a.dim();
    for (std::size_t ib = 0; ib < b.dim(); ++ib) {
        if (b.amp[ib] == cplx(0.0)) continue;
        for (std::size_t ia = 0; ia < da; ++ia)
            out.amp[(ib << a.n) | ia] = a.amp[ia] * b.amp[ib];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gates.

inline void apply_h(DenseState& s, int q) {
    const std::size_t m = std::size_t(1) << q;
    const double r = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < s.dim(); ++i)
        if (!(i & m)) {
            cplx a = s.amp[i], b = s.amp[i | m];
            s.amp[i] = (a + b) * r;
            s.amp[i | m] = (a - b) * r;
        }
}

inline void apply_x(DenseState& s, int q) {
    const std::size_t m = std::size_t(1) << q;
    for (std::size_t i = 0; i < s.dim(); ++i)
        if (!(i & m)) std::swap(s.amp[i], s.amp[i | m]);
}

inline void apply_z(DenseState& s, int q) {
    const std::size_t m = std::size_t(1) << q;
    for (std::size_t i = 0; i < s.dim(); ++i)
        if (i & m) s.amp[i] = -s.amp[i];
}

inline void apply_y(DenseState& s, int q) {
    const std::size_t m = std::size_t(1) << q;
    const cplx im(0.0, 1.0);
    for (std::size_t i = 0; i < s.dim(); ++i)
        if (!(i & m)) {
            cplx a = s.amp[i], b = s.amp[i | m];
            s.amp[i] = -im * b;
            s.amp[i | m] = im * a;
        }
}

inline void apply_cz(DenseState& s, int q1, int q2) {
    const std::size_t m = (std::size_t(1) << q1) | (std::size_t(1) << q2);
    for (std::size_t i = 0; i < s.dim(); ++i)
        if ((i & m) == m) s.amp[i] = -s.amp[i];
}

inline void apply_cnot(DenseState& s, int c, int t) {
    const std::size_t mc = std::size_t(1) << c, mt = std::size_t(1) << t;
    for (std::size_t i = 0; i < s.dim(); ++i)
        if ((i & mc) && !(i & mt)) std::swap(s.amp[i], s.amp[i | mt]);
}

inline void apply_swap(DenseState& s, int a, int b) {
    const std::size_t ma = std::size_t(1) << a, mb = std::size_t(1) << b;
    for (std::size_t i = 0; i < s.dim(); ++i)
        if ((i & ma) && !(i & mb)) std::swap(s.amp[i], s.amp[(i ^ ma) | mb]);
}

inline void apply_toffoli(DenseState& s, int c1, int c2, int t) {
    const std::size_t mc = (std::size_t(1) << c1) | (std::size_t(1) << c2);
    const std::size_t mt = std::size_t(1) << t;
    for (std::size_t i = 0; i < s.dim(); ++i)
        if ((i & mc) == mc && !(i & mt)) std::swap(s.amp[i], s.amp[i | mt]);
}

inline void apply_fredkin(DenseState& s, int c, int a, int b) {
    const std::size_t mc = std::size_t(1) << c;
    const std::size_t ma = std::size_t(1) << a, mb = std::size_t(1) << b;
    for (std::size_t i = 0; i < s.dim(); ++i)
        if ((i & mc) && (i & ma) && !(i & mb)) std::swap(s.amp[i], s.amp[(i ^ ma) | mb]);
}

inline void apply_gate(DenseState& s, const Gate& g) {
    for (int i = 0; i < g.arity(); ++i)
        if (g.q[i] < 0 || g.q[i] >= s.n) throw std::invalid_argument("apply_gate: bad operand");
    switch (g.kind) {
        case GateKind::X: apply_x(s, g.q[0]); break;
        case GateKind::Z: apply_z(s, g.q[0]); break;
        case GateKind::H: apply_h(s, g.q[0]); break;
        case GateKind::CZ: apply_cz(s, g.q[0], g.q[1]); break;
        case GateKind::CNOT: apply_cnot(s, g.q[0], g.q[1]); break;
        case GateKind::SWAP: apply_swap(s, g.q[0], g.q[1]); break;
        case GateKind::Toffoli: apply_toffoli(s, g.q[0], g.q[1], g.q[2]); break;
        case GateKind::Fredkin: apply_fredkin(s, g.q[0], g.q[1], g.q[2]); break;
    }
}

inline void apply_circuit(DenseState& s, const Circuit& c) {
    for (const auto& g : c.gates) apply_gate(s, g);
}

inline void apply_circuit_reversed(DenseState& s, const Circuit& c) {
    for (auto it = c.gates.rbegin(); it != c.gates.rend(); ++it) apply_gate(s, *it);
}

// ---------------------------------------------------------------------------
// Measurements.

struct MeasureResult {
    int value = +1;     // +1 / -1 eigenvalue
    double prob = 1.0;  // probability of this branch
    int bit() const { return value == +1 ? 0 : 1; }
};

namespace detail {

// Probability of outcome bit m for X (basis='X') or Z measurement on q.
inline double outcome_prob(const DenseState& s, int q, char basis, int m) {
    const std::size_t mask = std::size_t(1) << q;
    double p = 0;
    if (basis == 'Z') {
        for (std::size_t i = 0; i < s.dim(); ++i)
            if (((i & mask) != 0) == (m == 1)) p += std::norm(s.amp[i]);
    } else {
        const double sgn = (m == 0) ? 1.0 : -1.0;
        for (std::size_t i = 0; i < s.dim(); ++i)
            if (!(i & mask)) p += 0.5 * std::norm(s.amp[i] + sgn * s.amp[i | mask]);
    }
    return p;
}

inline void project(DenseState& s, int q, char basis, int m) {
    const std::size_t mask = std::size_t(1) << q;
    if (basis == 'Z') {
        for (std::size_t i = 0; i < s.dim(); ++i)
            if (((i & mask) != 0) != (m == 1)) s.amp[i] = 0.0;
    } else {
        const double sgn = (m == 0) ? 1.0 : -1.0;
        for (std::size_t i = 0; i < s.dim(); ++i)
            if (!(i & mask)) {
                cplx v = 0.5 * (s.amp[i] + sgn * s.amp[i | mask]);
                s.amp[i] = v;
                s.amp[i | mask] = sgn * v;
            }
    }
    s.normalize();
}

} // namespace detail

// Pauli measurement in the X or Z basis; the measured qubit stays in
// place (in the corresponding eigenstate).
inline MeasureResult measure_pauli(DenseState& s, int q, char basis, Rng& rng) {
    if (q < 0 || q >= s.n) throw std::invalid_argument("measure_pauli: bad qubit");
    double p0 = detail::outcome_prob(s, q, basis, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int m = (u(rng) < p0) ? 0 : 1;
    detail::project(s, q, basis, m);
    MeasureResult r;
    r.value = m == 0 ? +1 : -1;
    r.prob = m == 0 ? p0 : 1.0 - p0;
    return r;
}

inline MeasureResult measure_pauli_forced(DenseState& s, int q, char basis, int bit) {
    double p = detail::outcome_prob(s, q, basis, bit);
    if (p < 1e-14) throw std::runtime_error("measure_pauli_forced: zero-probability branch");
    detail::project(s, q, basis, bit);
    MeasureResult r;
    r.value = bit == 0 ? +1 : -1;
    r.prob = p;
    return r;
}

// Project qubit q and remove it from the register; qubits above q shift
// down by one.
inline MeasureResult measure_drop(DenseState& s, int q, char basis, Rng* rng, int forced_bit = -1) {
    const std::size_t mask = std::size_t(1) << q;
    const std::size_t lo = mask - 1;
    int m;
    double p0 = detail::outcome_prob(s, q, basis, 0);
    if (forced_bit >= 0) {
        m = forced_bit;
        double p = m == 0 ? p0 : 1.0 - p0;
        if (p < 1e-14) throw std::runtime_error("measure_drop: zero-probability branch");
    } else {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        m = (u(*rng) < p0) ? 0 : 1;
    }
    DenseState out(s.n - 1);
    out.amp.assign(out.dim(), 0.0);
    const double r = 1.0 / std::sqrt(2.0);
    for (std::size_t j = 0; j < out.dim(); ++j) {
        std::size_t i0 = ((j & ~lo) << 1) | (j & lo);
        std::size_t i1 = i0 | mask;
        if (basis == 'Z')
            out.amp[j] = (m == 0) ? s.amp[i0] : s.amp[i1];
        else
            out.amp[j] = (s.amp[i0] + (m == 0 ? 1.0 : -1.0) * s.amp[i1]) * r;
    }
    out.normalize();
    s = std::move(out);
    MeasureResult res;
    res.value = m == 0 ? +1 : -1;
    res.prob = m == 0 ? p0 : 1.0 - p0;
    return res;
}

// ---------------------------------------------------------------------------
// Bell basis and Bell measurement: |Psi_{a,b}> = (1/2) sum (-)^{ai+bj+ij} |i,j>,
// measured as CZ followed by X readout of both qubits (a from the first,
// b from the second; X=+1 corresponds to outcome bit 0).

struct BellOutcome {
    int a = 0, b = 0;
};

inline DenseState bell_state(int a, int b) {
    DenseState s(2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            s.amp[i | (j << 1)] = 0.5 * (((a * i + b * j + i * j) & 1) ? -1.0 : 1.0);
    return s;
}

inline BellOutcome bell_measure(DenseState& s, int q1, int q2, Rng& rng) {
    if (q1 == q2) throw std::invalid_argument("bell_measure: identical qubits");
    apply_cz(s, q1, q2);
    BellOutcome o;
    o.a = measure_pauli(s, q1, 'X', rng).bit();
    o.b = measure_pauli(s, q2, 'X', rng).bit();
    return o;
}

inline BellOutcome bell_measure_forced(DenseState& s, int q1, int q2, int a, int b) {
    apply_cz(s, q1, q2);
    measure_pauli_forced(s, q1, 'X', a);
    measure_pauli_forced(s, q2, 'X', b);
    return BellOutcome{a, b};
}

// Bell measurement that removes both qubits from the register. q1 and q2
// refer to the register before any removal.
inline BellOutcome bell_measure_drop(DenseState& s, int q1, int q2, Rng* rng, int fa = -1, int fb = -1) {
    apply_cz(s, q1, q2);
    BellOutcome o;
    o.a = measure_drop(s, q1, 'X', rng, fa).bit();
    int q2s = q2 > q1 ? q2 - 1 : q2;
    o.b = measure_drop(s, q2s, 'X', rng, fb).bit();
    return o;
}

// ---------------------------------------------------------------------------
// Haar-random states: normalized vectors of iid complex Gaussians; the
// squared amplitudes are then flat on the probability simplex.

inline DenseState haar_random_state(int n, Rng& rng) {
    if (n > 22) throw std::invalid_argument("haar_random_state: too many qubits");
    DenseState s(n);
    if (n == 0) return s;
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& c : s.amp) c = cplx(g(rng), g(rng));
    s.normalize();
    return s;
}

// ---------------------------------------------------------------------------
// Small helpers used by the protocol tests.

// Reduced density matrix on the given qubits (row-major, dimension 2^k).
inline std::vector<cplx> reduced_density_matrix(const DenseState& s, const std::vector<int>& qs) {
    int k = int(qs.size());
    std::size_t d = std::size_t(1) << k;
    std::vector<cplx> rho(d * d, 0.0);
    std::vector<std::size_t> masks(k);
    for (int i = 0; i < k; ++i) masks[i] = std::size_t(1) << qs[i];
    std::size_t sub_all = 0;
    for (auto m : masks) sub_all |= m;
    for (std::size_t i = 0; i < s.dim(); ++i) {
        if (s.amp[i] == cplx(0.0)) continue;
        std::size_t a = 0;
        for (int b = 0; b < k; ++b)
            if (i & masks[b]) a |= std::size_t(1) << b;
        std::size_t rest = i & ~sub_all;
        for (std::size_t bidx = 0; bidx < d; ++bidx) {
            std::size_t j = rest;
            for (int b = 0; b < k; ++b)
                if (bidx & (std::size_t(1) << b)) j |= masks[b];
            rho[a * d + bidx] += s.amp[i] * std::conj(s.amp[j]);
        }
    }
    return rho;
}

// Reorder qubits: new qubit i is old qubit perm[i]; perm must list every
// old qubit exactly once.
inline DenseState permute_qubits(const DenseState& s, const std::vector<int>& perm) {
    assert(int(perm.size()) == s.n);
    DenseState out(s.n);
    out.amp.assign(out.dim(), 0.0);
    for (std::size_t i = 0; i < s.dim(); ++i) {
        if (s.amp[i] == cplx(0.0)) continue;
        std::size_t j = 0;
        for (int b = 0; b < s.n; ++b)
            if (i & (std::size_t(1) << perm[b])) j |= std::size_t(1) << b;
        out.amp[j] = s.amp[i];
    }
    return out;
}

// Keep only the listed qubits (in the given order); the discarded qubits
// must factor out as a product state (any product state, not only a basis
// one), otherwise this throws.
inline DenseState extract_qubits(const DenseState& s, const std::vector<int>& keep, double tol = 1e-9) {
    std::vector<int> perm = keep;
    std::vector<char> used(s.n, 0);
    for (int q : keep) used[q] = 1;
    for (int q = 0; q < s.n; ++q)
        if (!used[q]) perm.push_back(q);
    DenseState p = permute_qubits(s, perm);
    int k = int(keep.size());
    std::size_t dk = std::size_t(1) << k;
    std::size_t rest = p.dim() >> k;
    // reference row: the residual index with the most weight
    std::vector<double> w(rest, 0.0);
    for (std::size_t i = 0; i < p.dim(); ++i) w[i >> k] += std::norm(p.amp[i]);
    std::size_t best = 0;
    for (std::size_t r = 1; r < rest; ++r)
        if (w[r] > w[best]) best = r;
    DenseState out(k);
    out.amp.assign(dk, 0.0);
    for (std::size_t a = 0; a < dk; ++a) out.amp[a] = p.amp[(best << k) | a];
    out.normalize();
    // product check: every residual row must be proportional to the output
    double err = 0.0;
    for (std::size_t r = 0; r < rest; ++r) {
        cplx c = 0;
        for (std::size_t a = 0; a < dk; ++a) c += std::conj(out.amp[a]) * p.amp[(r << k) | a];
        for (std::size_t a = 0; a < dk; ++a) err += std::norm(p.amp[(r << k) | a] - c * out.amp[a]);
    }
    if (err > tol) throw std::runtime_error("extract_qubits: residual entanglement");
    return out;
}

} // namespace qramsim

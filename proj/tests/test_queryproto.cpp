#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "qramsim/queryproto.hpp"

using namespace qramsim;

TEST_SUITE_BEGIN("queryproto");

namespace {

Dataset make_dataset(std::uint64_t N, std::uint64_t bits) {
    Dataset D(N);
    for (std::uint64_t i = 0; i < N; ++i) D.set(i, (bits >> i) & 1);
    return D;
}

} // namespace

TEST_CASE("phi1 structure") {
    for (std::uint64_t N : {2ULL, 4ULL}) {
        auto phi = build_phi1(N);
        CHECK(phi.state.n == phi.logn + int(2 * N - 1));
        CHECK(std::abs(phi.state.norm2() - 1.0) < 1e-12);
        // reduced state on I is maximally mixed
        std::vector<int> iq;
        for (int k = 0; k < phi.logn; ++k) iq.push_back(phi.i_index(k));
        auto rho = reduced_density_matrix(phi.state, iq);
        std::size_t d = std::size_t(1) << phi.logn;
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c) {
                double want = (r == c) ? 1.0 / double(d) : 0.0;
                CHECK(std::abs(rho[r * d + c] - want) < 1e-10);
            }
        // projecting I on <y| leaves sum_z (-)^{y.z} |NOHE(z,+)> / sqrt(N)
        NoheSchedule sch = nohe_schedule(N, true);
        for (std::uint64_t y = 0; y < N; ++y) {
            DenseState s = phi.state;
            for (int k = 0; k < phi.logn; ++k)
                measure_pauli_forced(s, phi.i_index(k), 'Z', int((y >> k) & 1));
            DenseState want(sch.wires);
            want.amp.assign(want.dim(), 0.0);
            for (std::uint64_t z = 0; z < N; ++z) {
                DenseState term = v_pm_reference(N, DenseState::basis(phi.logn, z),
                                                 std::vector<int>(phi.logn, 0),
                                                 std::vector<int>(phi.logn, 0));
                double sign = (std::popcount(y & z) & 1) ? -1.0 : 1.0;
                for (std::size_t i = 0; i < term.dim(); ++i)
                    want.amp[i] += sign * term.amp[i] / std::sqrt(double(N));
            }
            DenseState rest = extract_qubits(s, [&] {
                std::vector<int> keep;
                for (int w = 0; w < sch.wires; ++w) keep.push_back(phi.d_index(w));
                return keep;
            }());
            CHECK(fidelity(rest, want) > 1.0 - 1e-10);
        }
    }
}

TEST_CASE("gate teleportation: exhaustive forced outcomes") {
    Rng rng(83);
    for (std::uint64_t N : {2ULL, 4ULL}) {
        int logn = log2_exact(N);
        auto phi = build_phi1(N);
        DenseState psi = haar_random_state(logn, rng);
        for (std::uint64_t m = 0; m < (1ULL << (2 * logn)); ++m) {
            std::vector<BellOutcome> forced(logn);
            std::vector<int> a(logn), b(logn);
            for (int k = 0; k < logn; ++k) {
                forced[k].a = int((m >> (2 * k)) & 1);
                forced[k].b = int((m >> (2 * k + 1)) & 1);
                a[k] = forced[k].a;
                b[k] = forced[k].b;
            }
            auto out = gate_teleport(psi, phi, nullptr, &forced);
            DenseState want = v_pm_reference(N, psi, a, b);
            CHECK(fidelity(out.state, want) > 1.0 - 1e-10);
        }
    }
}

TEST_CASE("gate teleportation: pointer position and uniform outcomes") {
    Rng rng(89);
    std::uint64_t N = 4;
    int logn = 2;
    auto phi = build_phi1(N);
    // classical address: pointer lands at mu(x ^ b) in the OHE block
    for (std::uint64_t x = 0; x < N; ++x) {
        auto out = gate_teleport(DenseState::basis(logn, x), phi, &rng);
        std::uint64_t b = 0;
        for (int k = 0; k < logn; ++k) b |= std::uint64_t(out.b[k]) << k;
        std::uint64_t ptr = x ^ b;
        // the OHE block follows the N-1 NOHE qubits; check probability
        // weight 1/2 on the pointer wire being set
        double w = 0.0;
        std::size_t mask = std::size_t(1) << (N - 1 + ptr);
        for (std::size_t i = 0; i < out.state.dim(); ++i)
            if (i & mask) w += std::norm(out.state.amp[i]);
        CHECK(std::abs(w - 0.5) < 1e-10);
    }
    // outcome histogram uniform: chi^2 over 16 outcomes at 1e4 shots
    DenseState psi = haar_random_state(logn, rng);
    int counts[16] = {0};
    const int shots = 10000;
    for (int t = 0; t < shots; ++t) {
        auto out = gate_teleport(psi, phi, &rng);
        int m = 0;
        for (int k = 0; k < logn; ++k) m |= (out.a[k] << (2 * k)) | (out.b[k] << (2 * k + 1));
        ++counts[m];
    }
    double chi2 = 0.0;
    for (int k = 0; k < 16; ++k) {
        double e = shots / 16.0;
        chi2 += (counts[k] - e) * (counts[k] - e) / e;
    }
    CHECK(chi2 < 30.58); // chi^2_{15, 0.99}
}

TEST_CASE("adaptive load") {
    Dataset D = make_dataset(4, 0b0001);
    auto zs0 = adaptive_load(D, {0, 0});
    REQUIRE(zs0.size() == 1);
    CHECK(zs0[0] == 0);
    // b = (1,0): Z on l=1
    auto zs = adaptive_load(D, {1, 0});
    REQUIRE(zs.size() == 1);
    CHECK(zs[0] == 1);
    CHECK(adaptive_load(make_dataset(4, 0), {1, 1}).empty());
}

TEST_CASE("inversion gadget reproduces the branch equations") {
    // oracle: the conditional-state formulas evaluated literally
    Rng rng(97);
    for (int rep = 0; rep < 6; ++rep) {
        DenseState chi = haar_random_state(3, rng);
        for (int s0 = 0; s0 < 2; ++s0)
            for (int alpha = 0; alpha < 2; ++alpha)
                for (int beta = 0; beta < 2; ++beta) {
                    DenseState in = chi;
                    GadgetOutcome forced{s0, alpha, beta};
                    invert_gadget(in, 0, 1, 2, nullptr, &forced);
                    REQUIRE(in.n == 2);
                    // expected output per the two branch formulas, with the
                    // byproduct correction already applied by invert_gadget
                    DenseState want(2);
                    want.amp.assign(4, 0.0);
                    for (int i = 0; i < 2; ++i)
                        for (int j = 0; j < 2; ++j)
                            for (int k = 0; k < 2; ++k) {
                                cplx c = chi.amp[i | (j << 1) | (k << 2)];
                                if (s0 == 1 && ((i * j + i * k + k) & 1)) c = -c;
                                want.amp[i | ((j ^ k) << 1)] += c;
                            }
                    want.normalize();
                    CHECK(fidelity(in, want) > 1.0 - 1e-10);
                }
    }
}

TEST_CASE("gadget on in-image states and the out-of-image phase") {
    // chi = alpha|000> + beta|101> is U^{(4)}(alpha|00> + beta|10>)
    Rng rng(101);
    DenseState two = haar_random_state(1, rng);
    DenseState chi(3);
    chi.amp.assign(8, 0.0);
    chi.amp[0b000] = two.amp[0];
    chi.amp[0b101] = two.amp[1];
    for (int s0 = 0; s0 < 2; ++s0) {
        DenseState in = chi;
        GadgetOutcome forced{s0, 0, 1};
        invert_gadget(in, 0, 1, 2, nullptr, &forced);
        DenseState want(2);
        want.amp.assign(4, 0.0);
        want.amp[0b00] = two.amp[0];
        want.amp[0b11] = two.amp[1];
        CHECK(fidelity(in, want) > 1.0 - 1e-10);
    }
    // out-of-image |110> picks up a sign on the s0 = 1 branch:
    // chi = (|000> + |110>)/sqrt(2) maps to |00> +- |10> depending on s0
    DenseState bad(3);
    bad.amp.assign(8, 0.0);
    bad.amp[0b000] = 1.0 / std::sqrt(2.0);
    bad.amp[0b011] = 1.0 / std::sqrt(2.0); // (i=1, j=1, k=0)
    DenseState out0 = bad, out1 = bad;
    GadgetOutcome f0{0, 0, 0}, f1{1, 0, 0};
    invert_gadget(out0, 0, 1, 2, nullptr, &f0);
    invert_gadget(out1, 0, 1, 2, nullptr, &f1);
    CHECK(fidelity(out0, out1) < 0.2); // orthogonal branches: (|00>+|11>) vs (|00>-|11>)
}

TEST_CASE("invert_nohe round trips") {
    Rng rng(103);
    for (auto [N, with_bus] : std::vector<std::pair<std::uint64_t, bool>>{{2, true}, {4, true}, {8, false}}) {
        int logn = log2_exact(N);
        int in_qubits = with_bus ? logn + 1 : logn;
        NoheSchedule sch = nohe_schedule(N, with_bus);
        for (int rep = 0; rep < 12; ++rep) {
            DenseState psi = haar_random_state(in_qubits, rng);
            DenseState image = kron(psi, DenseState(sch.wires - in_qubits));
            apply_circuit(image, sch.forward_circuit());
            for (auto mode : {InversionMode::adaptive, InversionMode::frame}) {
                DenseState out = invert_nohe(image, N, with_bus, rng, mode);
                REQUIRE(out.n == in_qubits);
                CHECK(fidelity(out, psi) > 1.0 - 1e-10);
            }
        }
        // classical basis round trip: NOHE(x, +) inverts to |x>|+>
        if (with_bus) {
            for (std::uint64_t x = 0; x < N; ++x) {
                DenseState in = DenseState::basis(logn + 1, x);
                apply_h(in, logn); // bus |+>
                DenseState image = kron(in, DenseState(sch.wires - logn - 1));
                apply_circuit(image, sch.forward_circuit());
                DenseState out = invert_nohe(image, N, with_bus, rng, InversionMode::adaptive);
                DenseState want = DenseState::basis(logn + 1, x);
                apply_h(want, logn);
                CHECK(fidelity(out, want) > 1.0 - 1e-10);
            }
        }
    }
    // SQPM round count: 2 logN - 1 for the with-bus circuit
    CHECK(nohe_schedule(4, true).rounds == 3);
    CHECK(nohe_schedule(8, true).rounds == 5);
}

TEST_CASE("phi2 tableau and dense agree at N=2") {
    auto dense = build_phi2(2);
    auto tab = build_phi2_tableau(2);
    CHECK(dense.state.n == tab.n());
    CHECK(fidelity(tab.to_dense(), dense.state) > 1.0 - 1e-10);
    // pure stabilizer state: generator count equals qubit count
    CHECK(int(tab.generators().size()) == tab.n());
}

TEST_CASE("phi qubit budget and D/psi independence") {
    Rng rng(107);
    for (std::uint64_t N : {2ULL, 4ULL}) {
        auto phi = build_phi(N, PhiMode::postselect, rng);
        CHECK(phi.state.n == int(5 * N - 3));
        CHECK(phi.layout.total() == int(5 * N - 3));
        CHECK(std::abs(phi.state.norm2() - 1.0) < 1e-10);
    }
}

TEST_CASE("phi build modes agree") {
    Rng rng(109);
    // N=2: late c3 measurement makes the frame-corrected build reproduce
    // the postselected state exactly for any contraction outcomes
    auto canon2 = build_phi(2, PhiMode::postselect, rng, true);
    for (int rep = 0; rep < 8; ++rep) {
        auto framed = build_phi(2, PhiMode::frame, rng, true);
        CHECK(framed.s0prep == canon2.s0prep);
        CHECK(fidelity(framed.state, canon2.state) > 1.0 - 1e-10);
    }
    // early c3 measurement: random contraction outcomes may flip the
    // recorded s0prep; the state must match a postselected build with the
    // same s0prep forced
    for (int rep = 0; rep < 6; ++rep) {
        auto framed = build_phi(2, PhiMode::frame, rng, false);
        Rng tmp(1);
        auto matched = build_phi(2, PhiMode::postselect, tmp, false, &framed.s0prep);
        CHECK(fidelity(framed.state, matched.state) > 1.0 - 1e-10);
    }
    // N=4 spot checks (postselect vs frame with late measurement is too
    // large; early measurement keeps the transient at 22 qubits)
    auto canon4 = build_phi(4, PhiMode::postselect, rng, false);
    auto framed4 = build_phi(4, PhiMode::frame, rng, false);
    Rng tmp(2);
    auto matched4 = build_phi(4, PhiMode::postselect, tmp, false, &framed4.s0prep);
    CHECK(fidelity(framed4.state, matched4.state) > 1.0 - 1e-10);
}

TEST_CASE("reference query semantics") {
    Rng rng(113);
    for (std::uint64_t N : {2ULL, 4ULL}) {
        int logn = log2_exact(N);
        for (std::uint64_t d = 0; d < (1ULL << N); ++d) {
            Dataset D = make_dataset(N, d);
            for (std::uint64_t x = 0; x < N; ++x) {
                DenseState out = reference_query(DenseState::basis(logn, x), D);
                DenseState want = ideal_answer(DenseState::basis(logn, x), D);
                CHECK(fidelity(out, want) > 1.0 - 1e-12);
            }
            DenseState psi = haar_random_state(logn, rng);
            CHECK(fidelity(reference_query(psi, D), ideal_answer(psi, D)) > 1.0 - 1e-12);
        }
    }
}

TEST_CASE("reference query commutes with Z^a on the register") {
    Rng rng(127);
    std::uint64_t N = 4;
    Dataset D = make_dataset(N, 0b0110);
    DenseState psi = haar_random_state(2, rng);
    for (std::uint64_t a = 1; a < 4; ++a) {
        DenseState za_first = psi;
        for (int k = 0; k < 2; ++k)
            if ((a >> k) & 1) apply_z(za_first, k);
        DenseState lhs = reference_query(za_first, D);
        DenseState rhs = reference_query(psi, D);
        for (int k = 0; k < 2; ++k)
            if ((a >> k) & 1) apply_z(rhs, k);
        CHECK(fidelity(lhs, rhs) > 1.0 - 1e-12);
    }
}

TEST_CASE("end-to-end query at N=2") {
    Rng rng(131);
    auto phi = build_phi(2, PhiMode::postselect, rng);
    // D all-zero: output |psi>|0>
    {
        Dataset D(2);
        DenseState psi = haar_random_state(1, rng);
        DenseState out = run_query(psi, D, phi, rng);
        CHECK(fidelity(out, ideal_answer(psi, D)) > 1.0 - 1e-9);
    }
    // D = (1,0), psi = |0>: output |0>|1>
    {
        Dataset D = make_dataset(2, 0b01);
        DenseState out = run_query(DenseState::basis(1, 0), D, phi, rng);
        CHECK(fidelity(out, DenseState::basis(2, 0b10)) > 1.0 - 1e-9);
    }
    // random (psi, D) across sampled branches
    for (int rep = 0; rep < 40; ++rep) {
        Dataset D = make_dataset(2, rng() & 3);
        DenseState psi = haar_random_state(1, rng);
        QueryTranscript tr;
        DenseState out = run_query(psi, D, phi, rng, &tr);
        CHECK(fidelity(out, ideal_answer(psi, D)) > 1.0 - 1e-9);
        CHECK(tr.a.size() == 1);
        CHECK(tr.M.size() == 2);
    }
}

TEST_CASE("end-to-end query at N=4") {
    Rng rng(137);
    auto phi = build_phi(4, PhiMode::postselect, rng);
    for (int rep = 0; rep < 10; ++rep) {
        Dataset D = make_dataset(4, rng() & 15);
        DenseState psi = haar_random_state(2, rng);
        DenseState out = run_query(psi, D, phi, rng);
        CHECK(fidelity(out, ideal_answer(psi, D)) > 1.0 - 1e-8);
    }
}

TEST_CASE("rewriting identity: pointer permutation without materializing U_m") {
    // classical pointer check: V X^b |x,0> has its OHE-block pointer at
    // pi_b(mu(x)); run the expanded circuit classically
    for (std::uint64_t N : {4ULL, 16ULL, 64ULL}) {
        int logn = log2_exact(N);
        NoheSchedule sch = nohe_schedule(N, true);
        Circuit fwd_cl = expand_gadgets(sch.forward_circuit());
        for (std::uint64_t x = 0; x < N; ++x)
            for (int rep = 0; rep < 4; ++rep) {
                std::uint64_t b = (x * 2654435761u + rep * 40503u) % N;
                // classical input: |x ^ b> with bus bit 1 so the pointer is visible
                BitVec in(sch.wires);
                for (int k = 0; k < logn; ++k)
                    if (((x ^ b) >> k) & 1) in.set(k, true);
                in.set(logn, true);
                BitVec out = run_classical(fwd_cl, in);
                auto perm = pointer_permutation(mu_inv(b, logn));
                std::uint64_t want = perm(mu_prefix(Address(std::uint32_t(x), logn), logn));
                CHECK(out.get(std::size_t(N - 1 + want)));
            }
    }
}

TEST_SUITE_END();

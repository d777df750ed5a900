#include <doctest.h>

#include "qramsim/circuit.hpp"
#include "qramsim/cliffordlab.hpp"

using namespace qramsim;

TEST_SUITE_BEGIN("circuit");

TEST_CASE("sequential builder small cases") {
    auto c4 = build_nohe_sequential(4, false);
    REQUIRE(c4.gates.size() == 1);
    CHECK(c4.gates[0] == Gate(GateKind::Fredkin, 0, 1, 2));

    auto c8 = build_nohe_sequential(8, false);
    REQUIRE(c8.gates.size() == 5);
    CHECK(c8.gates[0] == Gate(GateKind::SWAP, 2, 3));
    CHECK(c8.gates[1] == Gate(GateKind::Fredkin, 0, 1, 2));
    CHECK(c8.gates[2] == Gate(GateKind::Fredkin, 0, 3, 4));
    CHECK(c8.gates[3] == Gate(GateKind::Fredkin, 1, 3, 5));
    CHECK(c8.gates[4] == Gate(GateKind::Fredkin, 2, 4, 6));
}

TEST_CASE("CSbar block has 2^K fredkins") {
    for (int K = 0; K <= 4; ++K) {
        auto gates = detail::csbar(K, K + 2);
        CHECK(gates.size() == std::size_t(1) << K);
    }
}

TEST_CASE("parallel layer structure") {
    auto p8 = build_nohe_parallel(8, false);
    CHECK(p8.cs_layer_count == 3); // 2 log8 - 3
    REQUIRE(p8.layers.size() == std::size_t(p8.swap_layer_count + 3));
    auto layer = [&](int t) { return p8.layers[p8.swap_layer_count + t]; };
    CHECK(layer(0).size() == 1); // (0|1)
    CHECK(layer(0)[0] == Gate(GateKind::Fredkin, 0, 1, 2));
    CHECK(layer(1)[0] == Gate(GateKind::Fredkin, 0, 3, 4));
    CHECK(layer(2).size() == 2); // (1|2)
    CHECK(build_nohe_parallel(16, false).cs_layer_count == 5);
    CHECK(build_nohe_parallel(8, true).cs_layer_count == 5); // 2 log8 - 1
}

TEST_CASE("per-layer qubit disjointness") {
    for (std::uint64_t N : {2ULL, 4ULL, 8ULL, 64ULL, 512ULL, 4096ULL}) {
        for (bool bus : {false, true}) {
            auto lc = build_nohe_parallel(N, bus);
            std::string err;
            CHECK_MESSAGE(lc.layers_disjoint(&err), err);
            auto ex = expand_gadgets(lc);
            CHECK_MESSAGE(ex.layers_disjoint(&err), err);
        }
    }
}

TEST_CASE("gadget expansion traces") {
    // CS(0|1,2) on |1,j,0>: TOFFOLI then CNOT give |1,0,j>
    Circuit c;
    c.qubit_count = 3;
    c.gates.emplace_back(GateKind::Fredkin, 0, 1, 2);
    auto e = expand_gadgets(c);
    REQUIRE(e.gates.size() == 2);
    CHECK(e.gates[0] == Gate(GateKind::Toffoli, 0, 1, 2));
    CHECK(e.gates[1] == Gate(GateKind::CNOT, 2, 1));
    for (int j = 0; j < 2; ++j) {
        BitVec in(3);
        in.set(0, true);
        in.set(1, j);
        auto out = run_classical(e, in);
        CHECK(out.get(0));
        CHECK_FALSE(out.get(1));
        CHECK(out.get(2) == (j == 1));
        // control 0: identity
        BitVec in0(3);
        in0.set(1, j);
        CHECK(run_classical(e, in0) == in0);
    }
    // expanded equals unexpanded on every basis input with the ancilla at 0
    for (std::uint64_t b = 0; b < 8; ++b) {
        if (b & 4) continue;
        BitVec in = BitVec::from_uint(b, 3);
        CHECK(run_classical(e, in) == run_classical(c, in));
    }
}

TEST_CASE("cost formulas") {
    auto r8 = count_costs(8, false);
    CHECK(r8.toffoli_count == 4); // 8 - 3 - 1
    CHECK(r8.t_count == 16);
    auto r8b = count_costs(8, true);
    CHECK(r8b.toffoli_count == 11); // 16 - 3 - 2
    CHECK(r8b.t_count == 44);
    CHECK(r8b.cs_layer_depth == 5);
    for (std::uint64_t N = 2; N <= 4096; N *= 2) {
        int logn = log2_exact(N);
        CHECK(count_costs(N, false).toffoli_count == N - logn - 1);
        CHECK(count_costs(N, true).toffoli_count == 2 * N - logn - 2);
        CHECK(count_costs(N, false).cs_layer_depth == std::max(0, 2 * logn - 3));
        CHECK(count_costs(N, true).cs_layer_depth == 2 * logn - 1);
    }
}

TEST_CASE("equivalence and nohe outputs") {
    for (std::uint64_t N : {2ULL, 4ULL, 8ULL, 16ULL, 32ULL}) {
        auto rep = verify_equivalence(N, false);
        CHECK_MESSAGE(rep.ok, rep.detail);
        auto repb = verify_equivalence(N, true);
        CHECK_MESSAGE(repb.ok, repb.detail);
    }
    // outputs equal the encoding module's nohe(x)
    std::uint64_t N = 32;
    auto c = build_nohe_sequential(N, false);
    for (std::uint64_t a = 0; a < N; ++a) {
        auto out = run_classical(c, nohe_input_bits(N, false, std::uint32_t(a), 0));
        CHECK(out == nohe(Address(std::uint32_t(a), 5)).flat);
    }
}

TEST_CASE("negative control: wrong gadget order breaks the map") {
    // CNOT before Toffoli is not a Fredkin on zeroed targets
    std::uint64_t N = 8;
    auto seq = build_nohe_sequential(N, false);
    Circuit wrong;
    wrong.qubit_count = seq.qubit_count;
    for (const auto& g : seq.gates) {
        if (g.kind == GateKind::Fredkin) {
            wrong.gates.emplace_back(GateKind::CNOT, g.q[2], g.q[1]);
            wrong.gates.emplace_back(GateKind::Toffoli, g.q[0], g.q[1], g.q[2]);
        } else {
            wrong.gates.push_back(g);
        }
    }
    bool all_match = true;
    for (std::uint64_t a = 0; a < N; ++a) {
        BitVec in = nohe_input_bits(N, false, std::uint32_t(a), 0);
        if (run_classical(wrong, in) != nohe_output_bits(N, false, std::uint32_t(a), 0))
            all_match = false;
    }
    CHECK_FALSE(all_match);
}

TEST_CASE("intermediate state property (sequential control blocks)") {
    // After control blocks K <= t-1: sectors 0..t hold their ohe sectors,
    // and each later sector K has its single bit at sum_{J<t} 2^J x_J.
    for (std::uint64_t N : {8ULL, 32ULL, 256ULL}) {
        int logn = log2_exact(N);
        for (std::uint64_t a = 0; a < N; ++a) {
            Address x(std::uint32_t(a), logn);
            BitVec s = nohe_input_bits(N, false, std::uint32_t(a), 0);
            // swaps first
            for (const auto& layer : detail::swap_stage(logn))
                for (const auto& g : layer) apply_gate_classical(g, s);
            for (int t = 1; t <= logn - 1; ++t) {
                // apply control block K = t-1: CSbar(t-1 | J) for J > t-1
                for (int J = t; J <= logn - 1; ++J)
                    for (const auto& g : detail::csbar(t - 1, J)) apply_gate_classical(g, s);
                std::uint64_t off = mu_prefix(x, t);
                for (int K = 0; K < logn; ++K) {
                    std::size_t base = NoheString::sector_offset(K);
                    for (std::size_t i = 0; i < (std::size_t(1) << K); ++i) {
                        bool want;
                        if (K <= t)
                            want = x.bit(K) && i == mu_prefix(x, K);
                        else
                            want = x.bit(K) && i == off;
                        CHECK(s.get(base + i) == want);
                    }
                }
            }
        }
    }
}

TEST_CASE("CSbar commutation (dense, N=8)") {
    // Blocks whose control and target sectors are pairwise distinct
    // commute as operators; that covers every exchange the parallel
    // schedule performs. Chained blocks (targets of one feeding controls
    // of the other) do not commute as full operators, only on the
    // circuit's reachable states.
    auto as_dense = [&](int K, int J) {
        Mat m(1 << 7);
        for (std::uint64_t b = 0; b < (1ULL << 7); ++b) {
            BitVec in = BitVec::from_uint(b, 7);
            for (const auto& g : detail::csbar(K, J)) apply_gate_classical(g, in);
            m.at(int(in.to_uint()), int(b)) = 1.0;
        }
        return m;
    };
    auto c01 = as_dense(0, 1), c02 = as_dense(0, 2), c12 = as_dense(1, 2);
    // shared control sector, disjoint targets: commute
    CHECK((c01 * c02).max_abs_diff(c02 * c01) < 1e-12);
    // chained sectors: genuinely non-commuting, and never exchanged by
    // the parallel schedule (both orders place (0|1) before (1|2))
    CHECK((c01 * c12).max_abs_diff(c12 * c01) > 0.5);
    // (0|3) vs (1|2) is an exchange the schedule does perform at N=16;
    // their sectors are disjoint, so they commute on every basis state
    for (std::uint64_t b = 0; b < (1ULL << 15); ++b) {
        BitVec lhs = BitVec::from_uint(b, 15), rhs = lhs;
        for (const auto& g : detail::csbar(0, 3)) apply_gate_classical(g, lhs);
        for (const auto& g : detail::csbar(1, 2)) apply_gate_classical(g, lhs);
        for (const auto& g : detail::csbar(1, 2)) apply_gate_classical(g, rhs);
        for (const auto& g : detail::csbar(0, 3)) apply_gate_classical(g, rhs);
        REQUIRE(lhs == rhs);
    }
}

TEST_CASE("orderings agree on arbitrary basis inputs") {
    // the sequential and parallel flattened orders differ only by
    // exchanges of sector-disjoint blocks, so they agree as permutations
    // of the whole basis, not just on valid inputs
    for (std::uint64_t N : {32ULL, 64ULL}) {
        auto seq = build_nohe_sequential(N, false);
        auto par = build_nohe_parallel(N, false).flatten();
        std::mt19937_64 rng(99);
        for (int rep = 0; rep < 500; ++rep) {
            BitVec in(N - 1);
            for (std::size_t i = 0; i < N - 1; ++i)
                if (rng() & 1) in.set(i, true);
            CHECK(run_classical(seq, in) == run_classical(par, in));
        }
    }
}

TEST_CASE("circuit text export") {
    auto c = build_nohe_sequential(8, false);
    auto txt = export_text(c);
    CHECK(txt.find("SWAP 2 3") == 0);
    CHECK(txt.find("FREDKIN 0 1 2") != std::string::npos);
    auto lt = export_text(build_nohe_parallel(8, false));
    CHECK(lt.find("---") != std::string::npos);
}

TEST_SUITE_END();

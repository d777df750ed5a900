#pragma once

// Neutral-atom factory model: the trap grid (sectors / columns /
// stations), the three AOD rearrangement layers that distribute Bell
// pairs according to the nested bifurcation graph, layer validation
// against AOD rigidity, and the T_Phi / T_query timing accounting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "qramsim/encoding.hpp"

namespace qramsim {

// Station trap (K, C, S, x, y): sector K, column C, station S, trap (x, y)
// inside the 3x3 station with the (1,3) spot a defect. x counts from the
// right edge of the station, so x = 3 is the station's empty left column.
struct TrapId {
    int K = 0, C = 0, S = 0, x = 1, y = 1;

    bool operator<(const TrapId& o) const {
        return std::tie(K, C, S, x, y) < std::tie(o.K, o.C, o.S, o.x, o.y);
    }
    bool operator==(const TrapId& o) const {
        return std::tie(K, C, S, x, y) == std::tie(o.K, o.C, o.S, o.x, o.y);
    }
};

inline bool trap_valid(const TrapId& t, int logn) {
    if (t.K < 0 || t.K >= logn) return false;
    if (t.C < 0 || t.C > t.K) return false;
    if (t.S < 0 || t.S >= (1 << t.C)) return false;
    if (t.x < 1 || t.x > 3 || t.y < 1 || t.y > 3) return false;
    if (t.x == 1 && t.y == 3) return false; // defect spot
    return true;
}

// Integer Cartesian coordinates: X = x + 3C + 3K(K+1)/2, Y = y + 3S.
struct Coord {
    long long X = 0, Y = 0;
    bool operator<(const Coord& o) const { return std::tie(X, Y) < std::tie(o.X, o.Y); }
    bool operator==(const Coord& o) const { return X == o.X && Y == o.Y; }
};

inline Coord trap_coord(const TrapId& t) {
    Coord c;
    c.X = t.x + 3LL * t.C + 3LL * t.K * (t.K + 1) / 2;
    c.Y = t.y + 3LL * t.S;
    return c;
}

inline std::uint64_t station_count(std::uint64_t N) {
    int logn = log2_exact(N);
    std::uint64_t c = 0;
    for (int K = 0; K < logn; ++K) c += (std::uint64_t(1) << (K + 1)) - 1;
    return c; // = 2N - logN - 2
}

// ---------------------------------------------------------------------------
// Initial occupancy: five atoms per station at (1,1),(1,2),(2,1),(2,2),(2,3);
// (2,3) is the gadget's fresh |0>, the others form two horizontal cluster
// pairs (1,1)-(2,1) and (1,2)-(2,2).

struct Occupancy {
    std::uint64_t N = 0;
    int logn = 0;
    std::set<Coord> atoms;
    // bonds as coordinate pairs (canonically ordered)
    std::vector<std::pair<Coord, Coord>> bonds;

    std::uint64_t trap_count() const { return 8 * station_count(N); }
};

inline void for_each_station(int logn, const std::function<void(int, int, int)>& f) {
    for (int K = 0; K < logn; ++K)
        for (int C = 0; C <= K; ++C)
            for (int S = 0; S < (1 << C); ++S) f(K, C, S);
}

inline Occupancy initial_occupancy(std::uint64_t N) {
    if (N < 4) throw std::invalid_argument("initial_occupancy: need N >= 4");
    Occupancy occ;
    occ.N = N;
    occ.logn = log2_exact(N);
    for_each_station(occ.logn, [&](int K, int C, int S) {
        auto at = [&](int x, int y) { return trap_coord(TrapId{K, C, S, x, y}); };
        for (auto [x, y] : {std::pair{1, 1}, {1, 2}, {2, 1}, {2, 2}, {2, 3}})
            occ.atoms.insert(at(x, y));
        occ.bonds.emplace_back(at(1, 1), at(2, 1));
        occ.bonds.emplace_back(at(1, 2), at(2, 2));
    });
    return occ;
}

// ---------------------------------------------------------------------------
// The three rearrangement layers. Layer 1 merges stations up their
// in-sector tree, layer 2 couples equal columns of neighboring sectors,
// layer 3 couples the deepest columns of neighboring sectors. Children
// 2s and 2s+1 land in parent station s at traps (3,2) and (3,3); layer 2
// lands at (3,1).

struct Move {
    TrapId from, to;
};

struct MoveLayer {
    std::vector<Move> moves;
};

inline std::array<MoveLayer, 3> plan_rearrangement(std::uint64_t N) {
    if (N < 4) throw std::invalid_argument("plan_rearrangement: need N >= 4");
    int logn = log2_exact(N);
    std::array<MoveLayer, 3> plan;
    for_each_station(logn, [&](int K, int C, int S) {
        if (C > 0) // layer 1: (K,C,S,1,2) -> (K, C-1, S/2, 3, 2 + S%2)
            plan[0].moves.push_back(Move{TrapId{K, C, S, 1, 2},
                                         TrapId{K, C - 1, S / 2, 3, 2 + (S % 2)}});
        if (C < K) // layer 2: (K,C,S,1,1) -> (K-1, C, S, 3, 1)
            plan[1].moves.push_back(Move{TrapId{K, C, S, 1, 1},
                                         TrapId{K - 1, C, S, 3, 1}});
        if (C == K && K > 0) // layer 3: (K,K,S,1,1) -> (K-1, K-1, S/2, 3, 2 + S%2)
            plan[2].moves.push_back(Move{TrapId{K, K, S, 1, 1},
                                         TrapId{K - 1, K - 1, S / 2, 3, 2 + (S % 2)}});
    });
    return plan;
}

// AOD rigidity: the induced maps on start X coordinates and on start Y
// coordinates must each be well-defined and strictly order-preserving,
// sources occupied, targets empty and collision-free.
inline bool validate_aod_layer(const MoveLayer& layer, const std::set<Coord>& occupied,
                               std::string* err = nullptr) {
    std::map<long long, long long> xmap, ymap;
    std::set<Coord> targets;
    auto fail = [&](const std::string& m) {
        if (err) *err = m;
        return false;
    };
    for (const auto& mv : layer.moves) {
        Coord f = trap_coord(mv.from), t = trap_coord(mv.to);
        if (!occupied.count(f)) return fail("source not occupied");
        if (occupied.count(t)) return fail("target occupied");
        if (!targets.insert(t).second) return fail("target collision");
        auto ix = xmap.find(f.X);
        if (ix == xmap.end()) xmap[f.X] = t.X;
        else if (ix->second != t.X) return fail("X map not well-defined");
        auto iy = ymap.find(f.Y);
        if (iy == ymap.end()) ymap[f.Y] = t.Y;
        else if (iy->second != t.Y) return fail("Y map not well-defined");
    }
    auto strictly_increasing = [](const std::map<long long, long long>& m) {
        long long prev = 0;
        bool first = true;
        for (const auto& [k, v] : m) {
            if (!first && v <= prev) return false;
            prev = v;
            first = false;
        }
        return true;
    };
    if (!strictly_increasing(xmap)) return fail("X map not order-preserving");
    if (!strictly_increasing(ymap)) return fail("Y map not order-preserving");
    return true;
}

// Replay the move layers on an occupancy, keeping bond endpoints current.
inline bool replay_rearrangement(Occupancy& occ, const std::array<MoveLayer, 3>& plan,
                                 std::string* err = nullptr) {
    for (const auto& layer : plan) {
        if (!validate_aod_layer(layer, occ.atoms, err)) return false;
        std::map<Coord, Coord> relocation;
        for (const auto& mv : layer.moves)
            relocation[trap_coord(mv.from)] = trap_coord(mv.to);
        for (const auto& [f, t] : relocation) {
            occ.atoms.erase(f);
            occ.atoms.insert(t);
        }
        for (auto& [a, b] : occ.bonds) {
            auto it = relocation.find(a);
            if (it != relocation.end()) a = it->second;
            it = relocation.find(b);
            if (it != relocation.end()) b = it->second;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Nested bifurcation graph from circuit data-flow: one vertex per gadget
// of the with-bus parallel schedule, an edge wherever one gadget's output
// wire is another's input. Vertices are keyed (C, J, i): CSbar(C|J)
// element i; station (K, C, S) hosts gadget (C | K+1, bitrev_C(S)).

struct NBGraph {
    std::uint64_t N = 0;
    // vertex (C, J, i) -> id
    std::map<std::tuple<int, int, int>, int> vertex_id;
    std::vector<std::tuple<int, int, int>> vertices;
    std::set<std::pair<int, int>> edges; // id pairs, first < second
    std::uint64_t tree_edge_count = 0;   // parent/child edges within a sector tree

    int id(int C, int J, int i) const { return vertex_id.at({C, J, i}); }
};

inline NBGraph build_nbg(std::uint64_t N) {
    if (N < 4) throw std::invalid_argument("build_nbg: need N >= 4");
    int logn = log2_exact(N);
    NBGraph g;
    g.N = N;
    // gadget group CSbar(C|J) exists for 0 <= C < J <= logn (with bus)
    for (int J = 1; J <= logn; ++J)
        for (int C = 0; C < J; ++C)
            for (int i = 0; i < (1 << C); ++i) {
                int id = int(g.vertices.size());
                g.vertices.emplace_back(C, J, i);
                g.vertex_id[{C, J, i}] = id;
            }
    auto add_edge = [&](int a, int b) {
        g.edges.insert({std::min(a, b), std::max(a, b)});
    };
    for (auto [C, J, i] : g.vertices) {
        int v = g.id(C, J, i);
        // tree edges: outputs (wires i and i + 2^C of sector J) feed the
        // next layer of the same tree
        if (C + 1 < J) {
            add_edge(v, g.id(C + 1, J, i));
            add_edge(v, g.id(C + 1, J, i + (1 << C)));
            g.tree_edge_count += 2;
        }
        // cascade edge: the control wire continues into the next sector
        if (J + 1 <= logn) add_edge(v, g.id(C, J + 1, i));
        // cascade start: a last-layer gadget's outputs become the controls
        // of the next tree's deepest layer
        if (C + 1 == J && J + 1 <= logn) {
            add_edge(v, g.id(J, J + 1, i));
            add_edge(v, g.id(J, J + 1, i + (1 << C)));
        }
    }
    return g;
}

inline int bit_reverse(int v, int bits) {
    int r = 0;
    for (int i = 0; i < bits; ++i)
        if (v & (1 << i)) r |= 1 << (bits - 1 - i);
    return r;
}

// Gadget hosted by station (K, C, S).
inline std::tuple<int, int, int> station_gadget(int K, int C, int S) {
    return {C, K + 1, bit_reverse(S, C)};
}

// Verify that replaying the three move layers produces exactly the NBG
// bond structure between stations.
inline bool verify_bpd(std::uint64_t N, std::string* err = nullptr) {
    Occupancy occ = initial_occupancy(N);
    auto plan = plan_rearrangement(N);
    if (!replay_rearrangement(occ, plan, err)) return false;
    NBGraph g = build_nbg(N);
    // coordinate -> station
    std::map<Coord, int> station_of;
    int logn = occ.logn;
    std::map<std::tuple<int, int, int>, int> station_id;
    int next = 0;
    for_each_station(logn, [&](int K, int C, int S) {
        station_id[{K, C, S}] = next;
        for (int x = 1; x <= 3; ++x)
            for (int y = 1; y <= 3; ++y) {
                if (x == 1 && y == 3) continue;
                station_of[trap_coord(TrapId{K, C, S, x, y})] = next;
            }
        ++next;
    });
    std::set<std::pair<int, int>> bond_edges;
    for (const auto& [a, b] : occ.bonds) {
        int sa = station_of.at(a), sb = station_of.at(b);
        if (sa != sb) bond_edges.insert({std::min(sa, sb), std::max(sa, sb)});
    }
    // intra-station bonds that stayed put realize no graph edge
    std::set<std::pair<int, int>> want;
    std::map<int, int> gadget_station; // nbg id -> station id
    for_each_station(logn, [&](int K, int C, int S) {
        gadget_station[g.id(C, K + 1, bit_reverse(S, C))] = station_id[{K, C, S}];
    });
    for (const auto& [a, b] : g.edges) {
        int sa = gadget_station.at(a), sb = gadget_station.at(b);
        want.insert({std::min(sa, sb), std::max(sa, sb)});
    }
    if (bond_edges != want) {
        if (err) *err = "bond adjacency differs from the NBG edge set";
        return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Timing model.

enum class RearrangementScheme { linear, optimized };

struct TimingInputs {
    double tau = 500e-6;  // mid-circuit readout time [s]
    double T = 0.0;       // minimal-distance move time; derived when 0
    double T0 = 200e-6;   // move time across d0
    double d0 = 110e-6;   // reference distance [m]
    double l = 3e-6;      // minimal trap distance [m]
    RearrangementScheme scheme = RearrangementScheme::optimized;
};

struct TimingReport {
    std::uint64_t N = 0;
    TimingInputs inputs;
    double T = 0.0;       // resolved minimal move time
    double T_r = 0.0;     // rearrangement
    double T_m = 0.0;     // measurements, 2 tau logN
    double T_g = 0.0;     // gates (neglected)
    double T_phi = 0.0;   // T_r + T_m + T_g
    double T_query = 0.0; // 2 tau logN
    double rate = 0.0;    // 1 / T_phi
    double rearrangement_fraction = 0.0;
};

inline TimingReport timing_report(std::uint64_t N, const TimingInputs& in) {
    if (in.tau <= 0 || in.T0 <= 0 || in.d0 <= 0 || in.l <= 0)
        throw std::invalid_argument("timing_report: inputs must be positive");
    int logn = log2_exact(N);
    TimingReport r;
    r.N = N;
    r.inputs = in;
    r.T = in.T > 0 ? in.T : in.T0 * std::sqrt(in.l / in.d0);
    if (in.scheme == RearrangementScheme::linear)
        r.T_r = 3.0 * std::sqrt(1.5 * double(N)) * r.T;
    else
        r.T_r = 3.0 * std::sqrt(6.0) * r.T * std::pow(double(N), 0.25);
    r.T_m = 2.0 * in.tau * logn;
    r.T_g = 0.0;
    r.T_phi = r.T_r + r.T_m + r.T_g;
    r.T_query = 2.0 * in.tau * logn;
    r.rate = 1.0 / r.T_phi;
    r.rearrangement_fraction = r.T_r / r.T_phi;
    return r;
}

} // namespace qramsim

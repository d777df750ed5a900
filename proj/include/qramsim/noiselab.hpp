#pragma once

// Error models, scalable per-address branch simulation of the unitary
// query pipeline V^{-1} W_D V, good-address-set extraction, fidelity
// bounds and Monte Carlo estimators, first-order enumeration and the
// log-log scaling fit.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "qramsim/circuit.hpp"
#include "qramsim/encoding.hpp"
#include "qramsim/haar.hpp"

namespace qramsim {

using Rng = std::mt19937_64;
using cplx = std::complex<double>;

enum class ErrorModelKind { CD, OP, EC };

inline const char* model_name(ErrorModelKind k) {
    switch (k) {
        case ErrorModelKind::CD: return "CD";
        case ErrorModelKind::OP: return "OP";
        case ErrorModelKind::EC: return "EC";
    }
    return "?";
}

struct ErrorModel {
    ErrorModelKind kind = ErrorModelKind::OP;
    double epsilon = 0.0;
};

struct ErrorEvent {
    int layer = 0;
    int qubit = 0;
    char pauli = 'Z';
};

struct ErrorConfig {
    std::vector<ErrorEvent> events; // sorted by layer
};

// How continuous depolarization counts idle time: from a qubit's first
// gate, or from layer 0 for every qubit.
enum class CdIdleRule { from_first_gate, from_start };

// ---------------------------------------------------------------------------
// Space-time layout of one query: H_bus, swaps, gadget-expanded CS
// sublayers, the load layer, and the mirrored inverse. Error events
// attach after a layer's gates.

struct QueryLayout {
    std::uint64_t N = 0;
    int logn = 0;
    int wires = 0; // 2N - 1
    std::vector<std::vector<Gate>> layers;
    int load_layer = -1; // data-dependent Z layer (no static gates)
    std::vector<int> alive_from;
    std::vector<std::vector<std::int32_t>> gate_at; // [layer][wire] -> gate idx or -1
    std::uint64_t toffoli_count = 0;
    // flattened multi-qubit gate operand slots (layer, qubit) for OP/EC
    std::vector<std::pair<int, int>> op_slots;

    int depth() const { return int(layers.size()); }
};

inline QueryLayout query_layout(std::uint64_t N) {
    QueryLayout lay;
    lay.N = N;
    lay.logn = log2_exact(N);
    auto expanded = expand_gadgets(build_nohe_parallel(N, true));
    lay.wires = expanded.qubit_count;

    auto push = [&](std::vector<Gate> g) { lay.layers.push_back(std::move(g)); };
    push({Gate(GateKind::H, lay.logn)});
    for (const auto& l : expanded.layers) push(l);
    lay.load_layer = int(lay.layers.size());
    push({}); // W_D: data-dependent single-qubit Z's
    for (auto it = expanded.layers.rbegin(); it != expanded.layers.rend(); ++it) push(*it);
    push({Gate(GateKind::H, lay.logn)});

    lay.alive_from.assign(lay.wires, int(lay.layers.size()));
    lay.gate_at.assign(lay.layers.size(), std::vector<std::int32_t>(lay.wires, -1));
    for (int t = 0; t < int(lay.layers.size()); ++t)
        for (int gi = 0; gi < int(lay.layers[t].size()); ++gi) {
            const Gate& g = lay.layers[t][gi];
            if (g.kind == GateKind::Toffoli) ++lay.toffoli_count;
            for (int i = 0; i < g.arity(); ++i) {
                lay.gate_at[t][g.q[i]] = gi;
                if (lay.alive_from[g.q[i]] > t) lay.alive_from[g.q[i]] = t;
                if (g.arity() >= 2) lay.op_slots.emplace_back(t, g.q[i]);
            }
        }
    // the load layer touches the whole OHE block; wake those wires there
    for (std::uint64_t l = 0; l < N; ++l) {
        int w = int(N - 1 + l);
        if (lay.alive_from[w] > lay.load_layer) lay.alive_from[w] = lay.load_layer;
    }
    return lay;
}

// ---------------------------------------------------------------------------
// Error sampling.

namespace detail {

inline char pick_pauli(Rng& rng) {
    static const char p[3] = {'X', 'Y', 'Z'};
    std::uniform_int_distribution<int> d(0, 2);
    return p[d(rng)];
}

// Geometric skipping over a virtual slot array of given size with per-slot
// probability p; calls f(slot) for each hit.
template <typename F>
inline void sample_slots(std::uint64_t slots, double p, Rng& rng, F&& f) {
    if (p <= 0.0 || slots == 0) return;
    if (p >= 1.0) {
        for (std::uint64_t s = 0; s < slots; ++s) f(s);
        return;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double il = 1.0 / std::log1p(-p);
    double pos = std::log(std::max(u(rng), 1e-300)) * il;
    while (pos < double(slots)) {
        f(std::uint64_t(pos));
        pos = std::floor(pos) + 1.0 + std::log(std::max(u(rng), 1e-300)) * il;
    }
}

} // namespace detail

inline ErrorConfig sample_error_config(const ErrorModel& model, const QueryLayout& lay, Rng& rng,
                                       CdIdleRule idle = CdIdleRule::from_first_gate) {
    ErrorConfig cfg;
    if (model.kind == ErrorModelKind::CD) {
        const std::uint64_t slots = std::uint64_t(lay.depth()) * lay.wires;
        detail::sample_slots(slots, 0.75 * model.epsilon, rng, [&](std::uint64_t s) {
            int t = int(s / lay.wires), w = int(s % lay.wires);
            if (idle == CdIdleRule::from_first_gate && lay.alive_from[w] > t) return;
            cfg.events.push_back(ErrorEvent{t, w, detail::pick_pauli(rng)});
        });
    } else {
        const double p = (model.kind == ErrorModelKind::OP) ? 0.75 * model.epsilon : model.epsilon;
        detail::sample_slots(lay.op_slots.size(), p, rng, [&](std::uint64_t s) {
            auto [t, w] = lay.op_slots[s];
            char pl = (model.kind == ErrorModelKind::EC) ? 'Z' : detail::pick_pauli(rng);
            cfg.events.push_back(ErrorEvent{t, w, pl});
        });
    }
    std::sort(cfg.events.begin(), cfg.events.end(),
              [](const ErrorEvent& a, const ErrorEvent& b) { return a.layer < b.layer; });
    return cfg;
}

// ---------------------------------------------------------------------------
// Sparse per-address branch propagation. A component is a computational
// basis state on the 2N-1 wires, stored as the sorted list of set wires;
// the bus Hadamards split and re-merge components, everything else maps
// basis states to basis states.

struct BranchComponent {
    std::vector<int> ones; // sorted
    cplx amp{1.0, 0.0};

    bool has(int w) const { return std::binary_search(ones.begin(), ones.end(), w); }
    void flip(int w) {
        auto it = std::lower_bound(ones.begin(), ones.end(), w);
        if (it != ones.end() && *it == w) ones.erase(it);
        else ones.insert(it, w);
    }
};

namespace detail {

inline void apply_gate_sparse(const Gate& g, BranchComponent& c) {
    switch (g.kind) {
        case GateKind::Toffoli:
            if (c.has(g.q[0]) && c.has(g.q[1])) c.flip(g.q[2]);
            break;
        case GateKind::CNOT:
            if (c.has(g.q[0])) c.flip(g.q[1]);
            break;
        case GateKind::SWAP: {
            bool a = c.has(g.q[0]), b = c.has(g.q[1]);
            if (a != b) { c.flip(g.q[0]); c.flip(g.q[1]); }
            break;
        }
        case GateKind::Fredkin:
            if (c.has(g.q[0])) {
                bool a = c.has(g.q[1]), b = c.has(g.q[2]);
                if (a != b) { c.flip(g.q[1]); c.flip(g.q[2]); }
            }
            break;
        case GateKind::X:
            c.flip(g.q[0]);
            break;
        case GateKind::Z:
            if (c.has(g.q[0])) c.amp = -c.amp;
            break;
        default:
            throw std::invalid_argument("apply_gate_sparse: unsupported gate");
    }
}

inline void merge_components(std::vector<BranchComponent>& comps) {
    std::sort(comps.begin(), comps.end(),
              [](const BranchComponent& a, const BranchComponent& b) { return a.ones < b.ones; });
    std::vector<BranchComponent> out;
    for (auto& c : comps) {
        if (!out.empty() && out.back().ones == c.ones) out.back().amp += c.amp;
        else out.push_back(std::move(c));
    }
    comps.clear();
    for (auto& c : out)
        if (std::abs(c.amp) > 1e-12) comps.push_back(std::move(c));
}

} // namespace detail

inline std::vector<BranchComponent> branch_propagate(const Address& x, const QueryLayout& lay,
                                                     const ErrorConfig& cfg, const Dataset& D) {
    std::vector<BranchComponent> comps(1);
    for (int k = 0; k < x.len; ++k)
        if (x.bit(k)) comps[0].ones.push_back(k);

    std::size_t ev = 0;
    std::vector<int> touched;
    for (int t = 0; t < lay.depth(); ++t) {
        bool merged_needed = false;
        if (t == lay.load_layer) {
            for (auto& c : comps)
                for (int w : c.ones)
                    if (w >= int(lay.N - 1) && D.bit(std::uint64_t(w) - (lay.N - 1))) c.amp = -c.amp;
        } else if (lay.layers[t].size() == 1 && lay.layers[t][0].kind == GateKind::H) {
            const int q = lay.layers[t][0].q[0];
            std::vector<BranchComponent> next;
            next.reserve(comps.size() * 2);
            const double r = 1.0 / std::sqrt(2.0);
            for (auto& c : comps) {
                bool hot = c.has(q);
                BranchComponent c0 = c, c1 = c;
                if (hot) c0.flip(q);
                else c1.flip(q);
                c0.amp *= r;
                c1.amp *= (hot ? -r : r);
                next.push_back(std::move(c0));
                next.push_back(std::move(c1));
            }
            comps = std::move(next);
            merged_needed = true;
        } else {
            const auto& ga = lay.gate_at[t];
            for (auto& c : comps) {
                touched.clear();
                for (int w : c.ones) {
                    std::int32_t gi = ga[w];
                    if (gi >= 0) touched.push_back(gi);
                }
                std::sort(touched.begin(), touched.end());
                touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
                for (std::int32_t gi : touched) detail::apply_gate_sparse(lay.layers[t][gi], c);
            }
        }
        for (; ev < cfg.events.size() && cfg.events[ev].layer == t; ++ev) {
            const auto& e = cfg.events[ev];
            for (auto& c : comps) {
                switch (e.pauli) {
                    case 'X':
                        c.flip(e.qubit);
                        break;
                    case 'Z':
                        if (c.has(e.qubit)) c.amp = -c.amp;
                        break;
                    case 'Y':
                        c.amp *= c.has(e.qubit) ? cplx(0, -1) : cplx(0, 1);
                        c.flip(e.qubit);
                        break;
                }
            }
        }
        if (merged_needed && t > lay.load_layer) detail::merge_components(comps);
    }
    detail::merge_components(comps);
    return comps;
}

// ---------------------------------------------------------------------------
// Good sets.

struct GoodSet {
    std::vector<std::uint32_t> members;
    std::vector<int> ancilla_key; // set ancilla wires of the shared key
    cplx key_phase{1.0, 0.0};
};

// Among addresses whose output is a single component with the correct
// |x, D_x> system part, group by (ancilla bits, amplitude phase) and
// return the largest group.
inline GoodSet good_set(const ErrorConfig& cfg, const Dataset& D, const QueryLayout& lay) {
    struct Key {
        std::vector<int> anc;
        long long re, im;
        bool operator<(const Key& o) const {
            if (anc != o.anc) return anc < o.anc;
            if (re != o.re) return re < o.re;
            return im < o.im;
        }
    };
    std::map<Key, GoodSet> groups;
    const int logn = lay.logn;
    for (std::uint64_t xi = 0; xi < lay.N; ++xi) {
        Address x(std::uint32_t(xi), logn);
        auto comps = branch_propagate(x, lay, cfg, D);
        if (comps.size() != 1) continue;
        const auto& c = comps[0];
        bool system_ok = true;
        std::vector<int> anc;
        bool bus = false;
        for (int w : c.ones) {
            if (w < logn) {
                if (!x.bit(w)) { system_ok = false; break; }
            } else if (w == logn) {
                bus = true;
            } else {
                anc.push_back(w);
            }
        }
        if (!system_ok) continue;
        for (int k = 0; k < logn; ++k)
            if (x.bit(k) && !c.has(k)) system_ok = false;
        if (!system_ok || bus != D.bit(xi)) continue;
        if (std::abs(std::abs(c.amp) - 1.0) > 1e-9) continue;
        Key key{anc, llround(c.amp.real() * 1e6), llround(c.amp.imag() * 1e6)};
        auto& g = groups[key];
        if (g.members.empty()) {
            g.ancilla_key = anc;
            g.key_phase = c.amp;
        }
        g.members.push_back(std::uint32_t(xi));
    }
    GoodSet best;
    for (auto& [k, g] : groups)
        if (g.members.size() > best.members.size()) best = std::move(g);
    return best;
}

// ---------------------------------------------------------------------------
// Fidelity bounds and estimators.

inline double fidelity_bound_pointwise(double s) {
    if (s < 0.0 || s > 1.0) throw std::invalid_argument("fidelity_bound_pointwise: s out of range");
    if (s < 0.5) return 0.0;
    double t = 2.0 * s - 1.0;
    return t * t;
}

inline double fidelity_bound_avg(double g, std::uint64_t N) {
    if (g < 0.0 || g > double(N)) throw std::invalid_argument("fidelity_bound_avg: bad group size");
    double t = g / double(N) - 0.5;
    if (t < 0.0) return 0.0;
    return 4.0 * t * t;
}

enum class FidelityEstimator { bound, s2 };

inline double estimate_from_good(std::uint64_t g, std::uint64_t N, FidelityEstimator est) {
    if (est == FidelityEstimator::bound) return fidelity_bound_avg(double(g), N);
    return double(g) * double(g + 1) / (double(N) * double(N + 1));
}

struct FidelityEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::uint64_t samples = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Dataset random_dataset(std::uint64_t N, Rng& rng) {
    Dataset D(N);
    std::uniform_int_distribution<int> coin(0, 1);
    for (std::uint64_t i = 0; i < N; ++i) D.set(i, coin(rng));
    return D;
}

} // namespace detail

// Monte Carlo over (dataset, error configuration). Work is partitioned by
// global sample index with per-index RNG streams, so results do not
// depend on the thread count.
inline FidelityEstimate estimate_fidelity(std::uint64_t N, const ErrorModel& model,
                                          std::uint64_t n_samples, std::uint64_t n_datasets,
                                          FidelityEstimator est, std::uint64_t seed,
                                          int threads = 1,
                                          CdIdleRule idle = CdIdleRule::from_first_gate) {
    if (n_samples == 0 || n_datasets == 0)
        throw std::invalid_argument("estimate_fidelity: sample counts must be positive");
    QueryLayout lay = query_layout(N);
    const std::uint64_t total = n_samples * n_datasets;
    std::vector<double> vals(total);
    auto worker = [&](std::uint64_t start, std::uint64_t step) {
        for (std::uint64_t i = start; i < total; i += step) {
            std::uint64_t d = i / n_samples;
            Rng drng(detail::splitmix64(seed ^ detail::splitmix64(0x1111 + d)));
            Dataset D = detail::random_dataset(N, drng);
            Rng crng(detail::splitmix64(seed ^ detail::splitmix64(0x2222 + i)));
            ErrorConfig cfg = sample_error_config(model, lay, crng, idle);
            std::uint64_t g;
            if (cfg.events.empty()) g = N;
            else g = good_set(cfg, D, lay).members.size();
            vals[i] = estimate_from_good(g, N, est);
        }
    };
    if (threads <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, std::uint64_t(t), std::uint64_t(threads));
        for (auto& th : pool) th.join();
    }
    double sum = 0.0, sum2 = 0.0;
    for (double v : vals) {
        sum += v;
        sum2 += v * v;
    }
    FidelityEstimate out;
    out.samples = total;
    out.mean = sum / double(total);
    double var = std::max(0.0, sum2 / double(total) - out.mean * out.mean);
    out.stderr_ = std::sqrt(var / double(total));
    return out;
}

// Exhaustive single-event enumeration: d(1-F)/depsilon at epsilon = 0,
// averaged over n_datasets random memories.
inline double enumerate_first_order(std::uint64_t N, ErrorModelKind kind,
                                    FidelityEstimator est, std::uint64_t n_datasets,
                                    std::uint64_t seed, int threads = 1,
                                    CdIdleRule idle = CdIdleRule::from_first_gate) {
    QueryLayout lay = query_layout(N);
    std::vector<std::pair<int, int>> slots; // (layer, qubit)
    if (kind == ErrorModelKind::CD) {
        for (int t = 0; t < lay.depth(); ++t)
            for (int w = 0; w < lay.wires; ++w)
                if (idle == CdIdleRule::from_start || lay.alive_from[w] <= t)
                    slots.emplace_back(t, w);
    } else {
        slots = lay.op_slots;
    }
    const char paulis_all[3] = {'X', 'Y', 'Z'};
    const bool z_only = (kind == ErrorModelKind::EC);
    const double weight = z_only ? 1.0 : 0.25; // d(prob)/d(eps) per (slot, Pauli)

    std::vector<double> per_dataset(n_datasets, 0.0);
    auto worker = [&](std::uint64_t start, std::uint64_t step) {
        for (std::uint64_t d = start; d < n_datasets; d += step) {
            Rng drng(detail::splitmix64(seed ^ detail::splitmix64(0x1111 + d)));
            Dataset D = detail::random_dataset(N, drng);
            double acc = 0.0;
            for (const auto& [t, w] : slots) {
                for (char p : paulis_all) {
                    if (z_only && p != 'Z') continue;
                    ErrorConfig cfg;
                    cfg.events.push_back(ErrorEvent{t, w, p});
                    std::uint64_t g = good_set(cfg, D, lay).members.size();
                    acc += weight * (1.0 - estimate_from_good(g, N, est));
                    if (z_only) break;
                }
            }
            per_dataset[d] = acc;
        }
    };
    if (threads <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, std::uint64_t(t), std::uint64_t(threads));
        for (auto& th : pool) th.join();
    }
    double sum = 0.0;
    for (double v : per_dataset) sum += v;
    return sum / double(n_datasets);
}

// Least-squares slope of log(infidelity) against log(log2 N).
inline double fit_scaling(const std::vector<std::pair<std::uint64_t, double>>& points) {
    if (points.size() < 4) throw std::invalid_argument("fit_scaling: need at least 4 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [N, infid] : points) {
        if (infid <= 0.0) throw std::invalid_argument("fit_scaling: non-positive infidelity");
        double x = std::log(std::log2(double(N)));
        double y = std::log(infid);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    double n = double(points.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace qramsim

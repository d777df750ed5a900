#pragma once

// Classical mathematics of (nested) one-hot encodings: the index map mu,
// per-prefix one-hot sectors, pointer permutations and adaptive data loads.

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qramsim/bitvec.hpp"

namespace qramsim {

inline bool is_power_of_two(std::uint64_t n) { return n >= 1 && (n & (n - 1)) == 0; }

inline int log2_exact(std::uint64_t n) {
    if (!is_power_of_two(n)) throw std::invalid_argument("log2_exact: not a power of two");
    int k = 0;
    while ((1ULL << k) < n) ++k;
    return k;
}

// A memory address: log2(N) bits, x_0 the least significant.
struct Address {
    std::uint32_t bits = 0;
    int len = 0;

    Address() = default;
    Address(std::uint32_t b, int l) : bits(b), len(l) {
        assert(l >= 0 && l < 32);
        assert(l == 32 || (b >> l) == 0);
    }
    bool bit(int k) const { return (bits >> k) & 1u; }
    std::uint64_t n() const { return 1ULL << len; }
};

// Classical memory contents: N bits indexed by mu(x).
struct Dataset {
    std::vector<std::uint64_t> words;
    std::uint64_t n = 0;

    Dataset() = default;
    explicit Dataset(std::uint64_t n_) : words((n_ + 63) / 64, 0), n(n_) {}

    bool bit(std::uint64_t i) const { return (words[i >> 6] >> (i & 63)) & 1ULL; }
    void set(std::uint64_t i, bool v) {
        std::uint64_t m = 1ULL << (i & 63);
        if (v) words[i >> 6] |= m; else words[i >> 6] &= ~m;
    }
    bool all_zero() const {
        for (auto w : words) if (w) return false;
        return true;
    }
};

// mu(z) = sum_J z_J 2^J. Bijective on fixed-length strings; the empty
// string maps to 0.
inline std::uint64_t mu(const std::vector<int>& bits) {
    std::uint64_t v = 0;
    for (std::size_t j = 0; j < bits.size(); ++j)
        if (bits[j]) v |= 1ULL << j;
    return v;
}

inline std::uint64_t mu_prefix(const Address& x, int len) {
    assert(len <= x.len);
    return x.bits & ((len >= 32) ? ~0u : ((1u << len) - 1u));
}

inline std::vector<int> mu_inv(std::uint64_t l, int len) {
    if (len < 64 && l >= (1ULL << len)) throw std::invalid_argument("mu_inv: index out of range");
    std::vector<int> bits(len);
    for (int j = 0; j < len; ++j) bits[j] = (l >> j) & 1;
    return bits;
}

// ohe^(K)(x): all-zero unless x_K = 1, in which case the single hot bit
// sits at mu(x_0..x_{K-1}).
inline BitVec ohe_sector(const Address& x, int K) {
    if (K < 0 || K >= x.len) throw std::invalid_argument("ohe_sector: K out of range");
    BitVec s(std::size_t(1) << K);
    if (x.bit(K)) s.set(mu_prefix(x, K), true);
    return s;
}

// Nested one-hot encoding: sectors K = 0..logN-1 concatenated, N-1 bits
// total. Sector K occupies offsets [2^K-1, 2^{K+1}-2].
struct NoheString {
    BitVec flat;   // length N-1
    int sectors;   // logN

    static std::size_t sector_offset(int K) { return (std::size_t(1) << K) - 1; }
    std::size_t sector_len(int K) const { return std::size_t(1) << K; }
    bool bit(int K, std::size_t a) const { return flat.get(sector_offset(K) + a); }
};

inline NoheString nohe(const Address& x) {
    NoheString out;
    out.sectors = x.len;
    out.flat = BitVec((std::size_t(1) << x.len) - 1);
    for (int K = 0; K < x.len; ++K)
        if (x.bit(K)) out.flat.set(NoheString::sector_offset(K) + mu_prefix(x, K), true);
    return out;
}

// Classical description of |NOHE(x)> (x) |OHE(x)|: the NOHE string plus a
// +/- pointer at position mu(x) in the trailing N-qubit block. bus = 1
// flips the pointer sign.
struct NoheWithBus {
    NoheString nohe_part;
    std::uint64_t pointer_position = 0;
    int pointer_sign = +1;
};

inline NoheWithBus nohe_with_bus(const Address& x, int bus) {
    NoheWithBus out;
    out.nohe_part = nohe(x);
    out.pointer_position = mu_prefix(x, x.len);
    out.pointer_sign = bus ? -1 : +1;
    return out;
}

// pi_b: l -> mu(mu_inv(l) ^ b), i.e. XOR of the index with mu(b). An
// involution; composes by XOR of the masks.
struct PointerPermutation {
    std::uint64_t mask = 0;
    std::uint64_t n = 0;
    std::uint64_t operator()(std::uint64_t l) const {
        assert(l < n);
        return l ^ mask;
    }
};

inline PointerPermutation pointer_permutation(const std::vector<int>& b) {
    PointerPermutation p;
    p.mask = mu(b);
    p.n = 1ULL << b.size();
    return p;
}

// B_l = D_{mu(mu_inv(l) ^ b)} = D_{l ^ mu(b)}. load_bits(D, 0) = D and
// applying the same b twice is the identity.
inline Dataset load_bits(const Dataset& D, const std::vector<int>& b) {
    if ((1ULL << b.size()) != D.n) throw std::invalid_argument("load_bits: length mismatch");
    std::uint64_t m = mu(b);
    Dataset B(D.n);
    for (std::uint64_t l = 0; l < D.n; ++l) B.set(l, D.bit(l ^ m));
    return B;
}

inline std::vector<int> address_to_bits(const Address& x) {
    std::vector<int> b(x.len);
    for (int j = 0; j < x.len; ++j) b[j] = x.bit(j);
    return b;
}

} // namespace qramsim

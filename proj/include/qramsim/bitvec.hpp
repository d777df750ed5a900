#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qramsim {

// Fixed-size bit vector backed by 64-bit words. Index 0 is the least
// significant bit of word 0 throughout (matches the little-endian bit
// order used by the address arithmetic).
class BitVec {
  public:
    BitVec() = default;
    explicit BitVec(std::size_t n) : n_(n), w_((n + 63) / 64, 0) {}

    static BitVec from_uint(std::uint64_t v, std::size_t n) {
        BitVec b(n);
        if (!b.w_.empty()) b.w_[0] = (n >= 64) ? v : (v & ((n == 0) ? 0 : ((~0ULL) >> (64 - n))));
        return b;
    }

    std::size_t size() const { return n_; }

    bool get(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1ULL; }
    void set(std::size_t i, bool v) {
        std::uint64_t m = 1ULL << (i & 63);
        if (v) w_[i >> 6] |= m; else w_[i >> 6] &= ~m;
    }
    void flip(std::size_t i) { w_[i >> 6] ^= 1ULL << (i & 63); }

    std::size_t popcount() const {
        std::size_t c = 0;
        for (auto w : w_) c += std::popcount(w);
        return c;
    }

    void xor_with(const BitVec& o) {
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] ^= o.w_[i];
    }

    // Parity of bitwise AND with o.
    bool and_parity(const BitVec& o) const {
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < w_.size(); ++i) acc ^= w_[i] & o.w_[i];
        return std::popcount(acc) & 1;
    }

    bool any() const {
        for (auto w : w_) if (w) return true;
        return false;
    }

    bool operator==(const BitVec& o) const { return n_ == o.n_ && w_ == o.w_; }
    bool operator!=(const BitVec& o) const { return !(*this == o); }
    bool operator<(const BitVec& o) const {
        if (n_ != o.n_) return n_ < o.n_;
        return w_ < o.w_;
    }

    std::uint64_t to_uint() const { return w_.empty() ? 0 : w_[0]; }

    std::string str() const {
        std::string s(n_, '0');
        for (std::size_t i = 0; i < n_; ++i) if (get(i)) s[i] = '1';
        return s;
    }

    std::size_t hash() const {
        std::size_t h = 1469598103934665603ULL ^ n_;
        for (auto w : w_) {
            h ^= w;
            h *= 1099511628211ULL;
        }
        return h;
    }

  private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> w_;
};

} // namespace qramsim

template <> struct std::hash<qramsim::BitVec> {
    std::size_t operator()(const qramsim::BitVec& b) const { return b.hash(); }
};

#pragma once

// Closed forms for averages over Haar-random states: amplitude and
// overlap moments, the overlap marginal density, incomplete-Beta
// integrals and the threshold lower bound.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace qramsim {
namespace haar {

inline double binom(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
    return r;
}

// f_n(x) = (1-x)^n / n!, the nested-integral helper.
inline double f_aux(int n, double x) {
    if (n < 0) throw std::invalid_argument("f_aux: negative order");
    double r = 1.0;
    for (int i = 1; i <= n; ++i) r *= (1.0 - x) / double(i);
    return r;
}

// Beta function for positive integer arguments: (a-1)!(b-1)!/(a+b-1)!.
inline double beta(int a, int b) {
    if (a < 1 || b < 1) throw std::invalid_argument("beta: arguments must be positive integers");
    // 1 / (binom(a+b-1, a) * a) is numerically stable enough here
    return 1.0 / (binom(std::uint64_t(a) + b - 1, a) * double(a));
}

// Incomplete Beta integral int_0^lambda x^{a-1} (1-x)^{b-1} dx for integer
// a, b, evaluated through the (all-positive) binomial tail identity.
inline double beta_inc(double lambda, int a, int b) {
    if (a < 1 || b < 1) throw std::invalid_argument("beta_inc: arguments must be positive integers");
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("beta_inc: lambda out of [0,1]");
    int n = a + b - 1;
    double reg = 0.0;
    for (int j = a; j <= n; ++j)
        reg += binom(n, j) * std::pow(lambda, j) * std::pow(1.0 - lambda, n - j);
    return reg * beta(a, b);
}

// <z_i^m> = 1 / binom(N+m-1, m).
inline double moment_z(int m, std::uint64_t N) {
    if (N < 2 || m < 0) throw std::invalid_argument("moment_z: need N >= 2, m >= 0");
    return 1.0 / binom(N + m - 1, m);
}

// <s^m> for s the sum of n squared amplitudes: binom(n+m-1,m)/binom(N+m-1,m).
inline double moment_s(int m, int n, std::uint64_t N) {
    if (n < 1 || std::uint64_t(n) > N) throw std::invalid_argument("moment_s: need 1 <= n <= N");
    return binom(std::uint64_t(n) + m - 1, m) / binom(N + m - 1, m);
}

// Marginal density of the overlap, P(s) = n binom(N-1,n) (1-s)^{N-n-1} s^{n-1}.
// The n = N case degenerates to a point mass at s = 1 and is rejected.
inline double overlap_pdf(double s, int n, std::uint64_t N) {
    if (n < 1 || std::uint64_t(n) >= N)
        throw std::invalid_argument("overlap_pdf: need 1 <= n < N (n = N is a point mass)");
    if (s < 0.0 || s > 1.0) return 0.0;
    return double(n) * binom(N - 1, n) * std::pow(1.0 - s, double(N - std::uint64_t(n) - 1)) *
           std::pow(s, n - 1);
}

// Joint marginal density of the first n squared amplitudes,
// p(z_1..z_n) = (N-1)!/(N-n-1)! (1-s)^{N-n-1} Theta(1-s).
inline double amplitudes_pdf(const std::vector<double>& z, std::uint64_t N) {
    int n = int(z.size());
    if (n < 1 || std::uint64_t(n) >= N) throw std::invalid_argument("amplitudes_pdf: need 1 <= n < N");
    double s = 0.0;
    for (double v : z) {
        if (v < 0.0) return 0.0;
        s += v;
    }
    if (s > 1.0) return 0.0;
    double r = std::pow(1.0 - s, double(N - std::uint64_t(n) - 1));
    for (std::uint64_t k = N - n; k <= N - 1; ++k) r *= double(k);
    return r;
}

// J_m(lambda) = <s^m Theta(s - lambda)> = <s^m> - n binom(N-1,n) B(lambda; n+m, N-n).
inline double j_integral(int m, double lambda, int n, std::uint64_t N) {
    if (n < 1 || std::uint64_t(n) > N) throw std::invalid_argument("j_integral: need 1 <= n <= N");
    if (std::uint64_t(n) == N) return lambda <= 1.0 ? 1.0 : 0.0; // s = 1 deterministically
    double tail = double(n) * binom(N - 1, n) * beta_inc(lambda, n + m, int(N - std::uint64_t(n)));
    return moment_s(m, n, N) - tail;
}

// Lower bound on int (s - 1/2) Theta(s - 1/2) d\psi; equals n/N - 1/2 and
// may be negative (the bound is then vacuous).
inline double threshold_lower(int n, std::uint64_t N) {
    return double(n) / double(N) - 0.5;
}

// Squared amplitudes of a Haar state: flat Dirichlet on the simplex.
inline std::vector<double> sample_simplex(std::uint64_t N, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> z(N);
    double t = 0.0;
    for (auto& v : z) {
        v = e(rng);
        t += v;
    }
    for (auto& v : z) v /= t;
    return z;
}

} // namespace haar
} // namespace qramsim

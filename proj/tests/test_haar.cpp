#include <doctest.h>

#include <cmath>
#include <tuple>
#include <utility>
#include <vector>

#include "qramsim/haar.hpp"

using namespace qramsim;
using namespace qramsim::haar;

TEST_SUITE_BEGIN("haar");

TEST_CASE("beta function identities") {
    CHECK(std::abs(beta(1, 1) - 1.0) < 1e-15);
    CHECK(std::abs(beta(2, 3) - 1.0 / 12.0) < 1e-15); // 1!2!/4!
    CHECK(std::abs(beta(4, 4) - 6.0 * 6.0 / 5040.0) < 1e-15);
    CHECK(std::abs(beta_inc(1.0, 3, 5) - beta(3, 5)) < 1e-15);
    CHECK(beta_inc(0.0, 3, 5) == 0.0);
    CHECK_THROWS(beta(0, 2));
    CHECK_THROWS(beta_inc(1.5, 2, 2));
}

TEST_CASE("beta_inc against quadrature") {
    auto quad = [](double lam, int a, int b) {
        const int steps = 200000;
        double h = lam / steps, acc = 0.0;
        for (int i = 0; i < steps; ++i) {
            double x0 = i * h, x1 = x0 + h, xm = x0 + 0.5 * h;
            auto f = [&](double x) { return std::pow(x, a - 1) * std::pow(1.0 - x, b - 1); };
            acc += h / 6.0 * (f(x0) + 4.0 * f(xm) + f(x1));
        }
        return acc;
    };
    for (auto [lam, a, b] : std::vector<std::tuple<double, int, int>>{{0.3, 2, 5}, {0.5, 4, 24}, {0.9, 11, 3}})
        CHECK(std::abs(beta_inc(lam, a, b) - quad(lam, a, b)) < 1e-10);
}

TEST_CASE("f_aux") {
    CHECK(std::abs(f_aux(0, 0.3) - 1.0) < 1e-15);
    CHECK(std::abs(f_aux(1, 0.25) - 0.75) < 1e-15);
    CHECK(std::abs(f_aux(3, 0.5) - 0.125 / 6.0) < 1e-15);
}

TEST_CASE("closed form moments") {
    CHECK(std::abs(moment_z(1, 16) - 1.0 / 16.0) < 1e-15);
    CHECK(std::abs(moment_z(2, 4) - 0.1) < 1e-15);
    CHECK(std::abs(moment_s(1, 3, 8) - 3.0 / 8.0) < 1e-15);
    // <s^m> = binom(n+m-1, m) <z^m>
    for (int m : {1, 2, 3})
        for (int n : {1, 2, 5})
            CHECK(std::abs(moment_s(m, n, 8) - binom(n + m - 1, m) * moment_z(m, 8)) < 1e-14);
}

TEST_CASE("overlap pdf normalizes and reproduces moments") {
    for (auto [n, N] : std::vector<std::pair<int, std::uint64_t>>{{1, 4}, {3, 8}, {8, 32}}) {
        const int steps = 400000;
        double h = 1.0 / steps;
        double mass = 0.0, m1 = 0.0, m2 = 0.0;
        for (int i = 0; i < steps; ++i) {
            double s = (i + 0.5) * h;
            double p = overlap_pdf(s, n, N);
            mass += p * h;
            m1 += p * s * h;
            m2 += p * s * s * h;
        }
        CHECK(std::abs(mass - 1.0) < 1e-8);
        CHECK(std::abs(m1 - moment_s(1, n, N)) < 1e-8);
        CHECK(std::abs(m2 - moment_s(2, n, N)) < 1e-8);
    }
    CHECK_THROWS(overlap_pdf(0.5, 4, 4)); // n = N is a point mass
}

TEST_CASE("j_integral properties") {
    // lambda = 0 gives the plain moment
    CHECK(std::abs(j_integral(2, 0.0, 3, 8) - moment_s(2, 3, 8)) < 1e-14);
    // quadrature cross-check
    for (auto [m, lam, n, N] : std::vector<std::tuple<int, double, int, std::uint64_t>>{
             {0, 0.5, 3, 8}, {1, 0.5, 3, 8}, {2, 0.25, 8, 32}}) {
        const int steps = 400000;
        double h = 1.0 / steps, acc = 0.0;
        for (int i = 0; i < steps; ++i) {
            double s = (i + 0.5) * h;
            if (s >= lam) acc += overlap_pdf(s, n, N) * std::pow(s, m) * h;
        }
        CHECK(std::abs(j_integral(m, lam, n, N) - acc) < 1e-6);
    }
    // n = N degenerates to the deterministic s = 1
    CHECK(j_integral(3, 0.5, 4, 4) == 1.0);
    // threshold bound: J_1(1/2) - J_0(1/2)/2 >= n/N - 1/2
    for (auto [n, N] : std::vector<std::pair<int, std::uint64_t>>{{1, 4}, {3, 8}, {8, 32}, {7, 8}}) {
        double integral = j_integral(1, 0.5, n, N) - 0.5 * j_integral(0, 0.5, n, N);
        CHECK(integral >= threshold_lower(n, N) - 1e-12);
    }
}

TEST_CASE("simplex sampling matches the closed forms") {
    std::mt19937_64 rng(71);
    for (auto [n, N] : std::vector<std::pair<int, std::uint64_t>>{{1, 4}, {3, 8}}) {
        const int samples = 100000;
        double m1 = 0.0, m2 = 0.0, z2 = 0.0, j1 = 0.0;
        for (int t = 0; t < samples; ++t) {
            auto z = sample_simplex(N, rng);
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += z[i];
            m1 += s;
            m2 += s * s;
            z2 += z[0] * z[0];
            if (s >= 0.5) j1 += s;
        }
        m1 /= samples;
        m2 /= samples;
        z2 /= samples;
        j1 /= samples;
        double tol = 6.0 / std::sqrt(double(samples));
        CHECK(std::abs(m1 - moment_s(1, n, N)) < tol);
        CHECK(std::abs(m2 - moment_s(2, n, N)) < tol);
        CHECK(std::abs(z2 - moment_z(2, N)) < tol);
        CHECK(std::abs(j1 - j_integral(1, 0.5, n, N)) < tol);
    }
}

TEST_CASE("amplitudes pdf values") {
    // p(z_1) = (N-1)(1-z)^{N-2}
    CHECK(std::abs(amplitudes_pdf({0.25}, 4) - 3.0 * std::pow(0.75, 2)) < 1e-12);
    // joint: (N-1)!/(N-n-1)! (1-s)^{N-n-1}
    double p = amplitudes_pdf({0.1, 0.2}, 4);
    CHECK(std::abs(p - 3.0 * 2.0 * std::pow(0.7, 1)) < 1e-12);
    CHECK(amplitudes_pdf({0.9, 0.3}, 4) == 0.0);
}

TEST_SUITE_END();

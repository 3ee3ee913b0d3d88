#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mvsde/rng.hpp"

#include <cmath>
#include <set>

using namespace mvsde;

TEST_CASE("streams are reproducible and distinct") {
    SplitRng a(42, 0), b(42, 0), c(42, 1);
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        CHECK(va == b.next_u64());
        CHECK(va != c.next_u64());
    }
}

TEST_CASE("uniform draws live in (0,1]") {
    SplitRng rng(1, 0);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_uniform();
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}

TEST_CASE("normal moments") {
    SplitRng rng(123, 7);
    const long n = 200000;
    double s1 = 0, s2 = 0, s4 = 0;
    for (long i = 0; i < n; ++i) {
        const double z = rng.next_normal();
        s1 += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    s1 /= n;
    s2 /= n;
    s4 /= n;
    CHECK(std::abs(s1) < 3.0 / std::sqrt(static_cast<double>(n)));          // mean 0
    CHECK(s2 == doctest::Approx(1.0).epsilon(0.02));                        // variance 1
    CHECK(s4 == doctest::Approx(3.0).epsilon(0.05));                        // kurtosis 3
}

TEST_CASE("cross-stream correlation is negligible") {
    SplitRng a(9, 0), b(9, 1);
    const long n = 100000;
    double acc = 0;
    for (long i = 0; i < n; ++i) acc += a.next_normal() * b.next_normal();
    CHECK(std::abs(acc / n) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("no short-cycle collisions within a stream") {
    SplitRng rng(5, 3);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 10000; ++i) seen.insert(rng.next_u64());
    CHECK(seen.size() == 10000);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mvsde/rng.hpp"
#include "mvsde/sqrtlift.hpp"
#include "mvsde/coeffs.hpp"
#include "mvsde/stats.hpp"

#include <cmath>

using namespace mvsde;

namespace {

Mat random_sigma(int d, int d1, SplitRng& rng) {
    Mat sigma(d, d1);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d1; ++j) sigma(i, j) = 2.0 * rng.next_uniform() - 1.0;
    }
    while (true) {
        Eigen::SelfAdjointEigenSolver<Mat> es(Mat(sigma * sigma.transpose()));
        if (es.eigenvalues().minCoeff() >= 0.05) break;
        sigma += 0.25 * rect_identity(d, d1);
    }
    return sigma;
}

std::vector<Vec> gaussian_increments(int dim, long steps, double dt, SplitRng& rng) {
    std::vector<Vec> out(static_cast<std::size_t>(steps));
    for (long k = 0; k < steps; ++k) {
        Vec v(dim);
        for (int i = 0; i < dim; ++i) v[i] = std::sqrt(dt) * rng.next_normal();
        out[static_cast<std::size_t>(k)] = v;
    }
    return out;
}

} // namespace

TEST_CASE("sym_sqrt on exact cases and a multiply-back oracle") {
    CHECK((sym_sqrt(Mat::Identity(3, 3), 1e-12) - Mat::Identity(3, 3)).norm() < 1e-14);

    Mat diag = Mat::Zero(2, 2);
    diag(0, 0) = 4.0;
    diag(1, 1) = 9.0;
    const Mat root = sym_sqrt(diag, 1e-12);
    CHECK(root(0, 0) == doctest::Approx(2.0));
    CHECK(root(1, 1) == doctest::Approx(3.0));
    CHECK(root(0, 1) == doctest::Approx(0.0));

    SplitRng rng(100, 0);
    for (int rep = 0; rep < 10; ++rep) {
        const Mat sigma = random_sigma(3, 3, rng);
        const Mat a = sigma * sigma.transpose();
        const Mat s = sym_sqrt(a, default_eig_floor(a));
        CHECK((s * s - a).norm() <= 1e-10 * a.norm());
        CHECK((s - s.transpose()).norm() <= 1e-12 * a.norm());
    }
}

TEST_CASE("sym_sqrt rejects degenerate and asymmetric input") {
    Mat bad = Mat::Zero(2, 2);
    bad(0, 0) = 1.0; // second eigenvalue is 0
    CHECK_THROWS_AS(sym_sqrt(bad, 1e-8), DegeneracyError);

    Mat asym(2, 2);
    asym << 1.0, 0.5, -0.5, 1.0;
    CHECK_THROWS_AS(sym_sqrt(asym, 1e-8), ConfigError);
}

TEST_CASE("build_lift identity case") {
    const LiftOperators lift = build_lift(Mat::Identity(2, 2), 1e-8);
    CHECK((lift.p - Mat::Identity(2, 2)).norm() < 1e-12);
    CHECK(lift.complement.norm() < 1e-12);
    CHECK(lift.min_eig_a == doctest::Approx(1.0));
}

TEST_CASE("build_lift on the hand-worked rectangular projector") {
    Mat sigma(2, 3);
    sigma << 1, 0, 0, 0, 1, 0;
    const LiftOperators lift = build_lift(sigma, 1e-8);
    CHECK((lift.p - sigma).norm() < 1e-12);
    Mat proj = Mat::Zero(3, 3);
    proj(0, 0) = proj(1, 1) = 1.0;
    CHECK((lift.projector - proj).norm() < 1e-12);
    Mat comp = Mat::Zero(3, 3);
    comp(2, 2) = 1.0;
    CHECK((lift.complement - comp).norm() < 1e-12);
}

TEST_CASE("projector idempotence and symmetry on random rectangles") {
    SplitRng rng(101, 0);
    for (int rep = 0; rep < 20; ++rep) {
        const Mat sigma = random_sigma(2, 4, rng);
        const LiftOperators lift = build_lift(sigma, 1e-6);
        CHECK((lift.projector * lift.projector - lift.projector).norm() < 1e-10);
        CHECK((lift.projector - lift.projector.transpose()).norm() < 1e-10);
        CHECK((sigma * lift.p.transpose() - lift.sqrt_a).norm() < 1e-10 * lift.a.norm() + 1e-12);
        CHECK((lift.sqrt_a * lift.sqrt_a - lift.a).norm() < 1e-10 * lift.a.norm() + 1e-12);
    }
}

TEST_CASE("degenerate sigma is refused with the eigenvalue in the message") {
    Mat sigma(2, 3);
    sigma << 1, 0, 0, 1, 0, 0; // rank one
    try {
        build_lift(sigma, 1e-8);
        FAIL("expected DegeneracyError");
    } catch (const DegeneracyError& e) {
        CHECK(std::string(e.what()).find("eigenvalue") != std::string::npos);
    }
}

TEST_CASE("synthesize_w0 special cases") {
    SUBCASE("square identity passes dW~ through") {
        const LiftOperators lift = build_lift(Mat::Identity(2, 2), 1e-8);
        SplitRng rng(7, 0);
        const auto dwt = gaussian_increments(2, 50, 0.01, rng);
        const auto dwb = gaussian_increments(2, 50, 0.01, rng);
        const auto dw0 = synthesize_w0({lift}, dwt, dwb);
        for (std::size_t k = 0; k < dwt.size(); ++k) {
            CHECK((dw0[k] - dwt[k]).norm() < 1e-14);
        }
    }

    SUBCASE("row sigma [1, 0] routes the drive and the spare coordinate") {
        Mat sigma(1, 2);
        sigma << 1, 0;
        const LiftOperators lift = build_lift(sigma, 1e-8);
        std::vector<Vec> dwt{Vec::Constant(1, 0.3)};
        Vec bar(2);
        bar << 0.7, -0.2;
        const auto dw0 = synthesize_w0({lift}, dwt, {bar});
        CHECK(dw0[0][0] == doctest::Approx(0.3));  // p^T dW~
        CHECK(dw0[0][1] == doctest::Approx(-0.2)); // complement picks dWbar_2
    }
}

TEST_CASE("levy_check on zero increments reports the full deviation") {
    const std::vector<Vec> zeros(16, Vec::Zero(2));
    const LevyReport rep = levy_check(zeros, 1.0);
    CHECK(rep.covariation.norm() == 0.0);
    CHECK(rep.max_diag_reldev == doctest::Approx(1.0));
    CHECK(rep.max_offdiag == 0.0);
}

TEST_CASE("levy_check concentrates for true Wiener increments") {
    const long steps = 200000;
    const double T = 1.0;
    const double dt = T / static_cast<double>(steps);

    SUBCASE("square identity lift") {
        SplitRng rng(55, 0);
        const LiftOperators lift = build_lift(Mat::Identity(2, 2), 1e-8);
        const auto dwt = gaussian_increments(2, steps, dt, rng);
        const auto dwb = gaussian_increments(2, steps, dt, rng);
        const LevyReport rep = levy_check(synthesize_w0({lift}, dwt, dwb), T);
        CHECK(rep.max_diag_reldev < 0.01);
        CHECK(rep.max_offdiag < 3.0 * T / std::sqrt(static_cast<double>(steps)));
    }

    SUBCASE("rectangular lift") {
        SplitRng rng(56, 0);
        const Mat sigma = random_sigma(2, 3, rng);
        const LiftOperators lift = build_lift(sigma, 1e-8);
        SplitRng rng_t(56, 1), rng_b(56, 2);
        const auto dwt = gaussian_increments(2, steps, dt, rng_t);
        const auto dwb = gaussian_increments(3, steps, dt, rng_b);
        const LevyReport rep = levy_check(synthesize_w0({lift}, dwt, dwb), T);
        CHECK(rep.max_diag_reldev < 0.01);
        CHECK(rep.max_offdiag < 3.0 * T / std::sqrt(static_cast<double>(steps)));
    }
}

TEST_CASE("levy deviation scales like one over sqrt steps") {
    SplitRng sigma_rng(57, 0);
    const Mat sigma = random_sigma(2, 3, sigma_rng);
    const LiftOperators lift = build_lift(sigma, 1e-8);
    const double T = 1.0;

    std::vector<double> ladder{1000, 8000, 64000};
    std::vector<double> devs;
    for (std::size_t li = 0; li < ladder.size(); ++li) {
        const long steps = static_cast<long>(ladder[li]);
        const double dt = T / static_cast<double>(steps);
        double acc = 0.0;
        const int reps = 8;
        for (int rep = 0; rep < reps; ++rep) {
            SplitRng rng_t(58, static_cast<std::uint64_t>(100 * li + rep));
            SplitRng rng_b(59, static_cast<std::uint64_t>(100 * li + rep));
            const auto dwt = gaussian_increments(2, steps, dt, rng_t);
            const auto dwb = gaussian_increments(3, steps, dt, rng_b);
            const LevyReport r = levy_check(synthesize_w0({lift}, dwt, dwb), T);
            acc += (r.covariation - T * Mat::Identity(3, 3)).norm() / T;
        }
        devs.push_back(acc / 8.0);
    }
    const double slope = loglog_slope(ladder, devs);
    CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("reconstruction identity") {
    SUBCASE("square identity is exact") {
        const LiftOperators lift = build_lift(Mat::Identity(3, 3), 1e-8);
        SplitRng rng(60, 0);
        const auto dwt = gaussian_increments(3, 100, 0.01, rng);
        const auto dwb = gaussian_increments(3, 100, 0.01, rng);
        const auto dw0 = synthesize_w0({lift}, dwt, dwb);
        CHECK(reconstruction_check({Mat::Identity(3, 3)}, {lift}, dwt, dw0) == 0.0);
    }

    SUBCASE("row sigma [1, 0] is exact to rounding") {
        Mat sigma(1, 2);
        sigma << 1, 0;
        const LiftOperators lift = build_lift(sigma, 1e-8);
        SplitRng rng(61, 0);
        const auto dwt = gaussian_increments(1, 100, 0.01, rng);
        const auto dwb = gaussian_increments(2, 100, 0.01, rng);
        const auto dw0 = synthesize_w0({lift}, dwt, dwb);
        CHECK(reconstruction_check({sigma}, {lift}, dwt, dw0) <= 1e-12);
    }

    SUBCASE("random rectangles stay below 1e-10 of scale") {
        SplitRng rng(62, 0);
        for (int rep = 0; rep < 5; ++rep) {
            const Mat sigma = random_sigma(2, 4, rng);
            const LiftOperators lift = build_lift(sigma, 1e-8);
            const auto dwt = gaussian_increments(2, 1000, 1e-3, rng);
            const auto dwb = gaussian_increments(4, 1000, 1e-3, rng);
            const auto dw0 = synthesize_w0({lift}, dwt, dwb);
            CHECK(reconstruction_check({sigma}, {lift}, dwt, dw0) <= 1e-10 * sigma.norm());
        }
    }
}

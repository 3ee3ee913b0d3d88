#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mvsde/conditions.hpp"

#include <cmath>

using namespace mvsde;

namespace {

KernelCoefficients custom(int d, int d1, std::function<Vec(double, const Vec&, const Vec&)> b,
                          std::function<Mat(double, const Vec&, const Vec&)> s, double growth) {
    KernelCoefficients c;
    c.dim_state = d;
    c.dim_noise = d1;
    c.drift_kernel = std::move(b);
    c.diffusion_kernel = std::move(s);
    c.growth_constant = growth;
    return c;
}

const SamplePlan kPlan{1.0, 5.0, 5.0, 4096};

} // namespace

TEST_CASE("linear growth: zero drift with identity diffusion passes at C = 1") {
    auto c = custom(
        1, 1, [](double, const Vec&, const Vec&) { return Vec::Zero(1); },
        [](double, const Vec&, const Vec&) { return Mat::Identity(1, 1); }, 1.0);
    const ConditionReport rep = check_linear_growth(c, kPlan);
    CHECK(rep.passed);
    CHECK(rep.worst_ratio <= 1.0);
    CHECK(rep.samples_checked == kPlan.count);
}

TEST_CASE("linear growth: b = 2x fails at C = 1 with a corner witness") {
    auto c = custom(
        1, 1,
        [](double, const Vec& x, const Vec&) { return Vec(2.0 * x); },
        [](double, const Vec&, const Vec&) { return Mat::Zero(1, 1); }, 1.0);
    const ConditionReport rep = check_linear_growth(c, kPlan);
    CHECK_FALSE(rep.passed);
    // ratio 2|x|/(1+|x|) peaks at the box corner |x| = 5
    CHECK(std::abs(rep.worst_witness.x[0]) > 4.0);
    CHECK(rep.worst_ratio == doctest::Approx(2.0 * std::abs(rep.worst_witness.x[0]) /
                                             (1.0 + std::abs(rep.worst_witness.x[0]))));
}

TEST_CASE("linear growth: b = x passes at C = 1") {
    auto c = custom(
        1, 1, [](double, const Vec& x, const Vec&) { return x; },
        [](double, const Vec&, const Vec&) { return Mat::Zero(1, 1); }, 1.0);
    const ConditionReport rep = check_linear_growth(c, kPlan);
    CHECK(rep.passed);
    CHECK(rep.worst_ratio < 1.0);
}

TEST_CASE("nondegeneracy: identity, scaled diagonal, rectangular") {
    auto id = custom(
        2, 2, [](double, const Vec&, const Vec&) { return Vec::Zero(2); },
        [](double, const Vec&, const Vec&) { return Mat::Identity(2, 2); }, 1.0);
    CHECK(check_nondegeneracy(id, kPlan, 0.5).min_eigenvalue == doctest::Approx(1.0));
    CHECK(check_nondegeneracy(id, kPlan, 0.5).passed);

    // diag(1, eps): min eigenvalue of sigma sigma^T is eps^2 (oracle by hand).
    const double eps = 1e-2;
    auto diag = custom(
        2, 2, [](double, const Vec&, const Vec&) { return Vec::Zero(2); },
        [eps](double, const Vec&, const Vec&) {
            Mat m = Mat::Identity(2, 2);
            m(1, 1) = eps;
            return m;
        },
        1.0);
    const ConditionReport rep = check_nondegeneracy(diag, kPlan, 1e-5);
    CHECK(rep.min_eigenvalue == doctest::Approx(eps * eps));
}

TEST_CASE("nondegeneracy floor comparisons") {
    const double eps = 1e-2;
    auto diag = custom(
        2, 2, [](double, const Vec&, const Vec&) { return Vec::Zero(2); },
        [eps](double, const Vec&, const Vec&) {
            Mat m = Mat::Identity(2, 2);
            m(1, 1) = eps;
            return m;
        },
        1.0);
    CHECK_FALSE(check_nondegeneracy(diag, kPlan, 1e-3).passed); // eps^2 = 1e-4 < 1e-3
    CHECK(check_nondegeneracy(diag, kPlan, 1e-5).passed);

    // sigma = [[1,0,0],[0,1,0]]: sigma sigma^T = I_2, min eigenvalue 1.
    auto rect = custom(
        2, 3, [](double, const Vec&, const Vec&) { return Vec::Zero(2); },
        [](double, const Vec&, const Vec&) { return rect_identity(2, 3); }, 1.0);
    const ConditionReport rep = check_nondegeneracy(rect, kPlan, 0.5);
    CHECK(rep.min_eigenvalue == doctest::Approx(1.0));
    CHECK(rep.passed);
}

TEST_CASE("lipschitz: constant sigma has zero quotient") {
    auto c = custom(
        1, 1, [](double, const Vec&, const Vec&) { return Vec::Zero(1); },
        [](double, const Vec&, const Vec&) { return Mat::Identity(1, 1); }, 1.0);
    const ConditionReport rep =
        check_lipschitz(c, kPlan, Condition::lipschitz_sigma_global, 1.0);
    CHECK(rep.passed);
    CHECK(rep.worst_ratio == doctest::Approx(0.0));
}

TEST_CASE("lipschitz: sigma = 2x I fails a claimed constant of 1") {
    auto c = custom(
        1, 1, [](double, const Vec&, const Vec&) { return Vec::Zero(1); },
        [](double, const Vec& x, const Vec&) { return Mat(2.0 * x.asDiagonal()); }, 1.0);
    const ConditionReport rep =
        check_lipschitz(c, kPlan, Condition::lipschitz_sigma_global, 1.0);
    CHECK_FALSE(rep.passed);
    CHECK(rep.worst_ratio == doctest::Approx(2.0)); // quotient is exactly 2 everywhere
}

TEST_CASE("lipschitz with local y-weight: b = y^2 x passes at C = 1") {
    auto c = custom(
        1, 1,
        [](double, const Vec& x, const Vec& y) { return Vec(y[0] * y[0] * x); },
        [](double, const Vec&, const Vec&) { return Mat::Zero(1, 1); }, 1.0);
    const ConditionReport rep = check_lipschitz(c, kPlan, Condition::lipschitz_x_local_y, 1.0);
    CHECK(rep.passed); // quotient y^2/(1+y^2) < 1
    CHECK(rep.worst_ratio < 1.0);
    CHECK(rep.worst_ratio > 0.9); // box reaches |y| = 5, quotient up to 25/26
}

TEST_CASE("checkers reproduce the builtin verdicts") {
    for (const std::string& name : builtin_names()) {
        const KernelCoefficients c = make_builtin(name, {}, 1, 1);
        const auto verdicts = builtin_condition_verdicts(name);
        CHECK(check_linear_growth(c, kPlan).passed == verdicts.at(Condition::linear_growth));
        CHECK(check_nondegeneracy(c, kPlan, 1e-6).passed == verdicts.at(Condition::nondegeneracy));
        const double lipC = 1.01 * std::max(1.0, c.growth_constant);
        CHECK(check_lipschitz(c, kPlan, Condition::lipschitz_x_local_y, lipC).passed ==
              verdicts.at(Condition::lipschitz_x_local_y));
        CHECK(check_lipschitz(c, kPlan, Condition::lipschitz_sigma_global, lipC).passed ==
              verdicts.at(Condition::lipschitz_sigma_global));
    }
}

TEST_CASE("reports are bit-deterministic for identical plans") {
    const KernelCoefficients c = make_builtin("bounded_measurable", {}, 1, 1);
    const ConditionReport a = check_linear_growth(c, kPlan);
    const ConditionReport b = check_linear_growth(c, kPlan);
    CHECK(a.worst_ratio == b.worst_ratio);
    CHECK(a.worst_witness.t == b.worst_witness.t);
    CHECK(a.worst_witness.x[0] == b.worst_witness.x[0]);
    CHECK(a.samples_checked == b.samples_checked);
}

TEST_CASE("strong nondegeneracy needs a square symmetric-definite sigma") {
    auto sym = custom(
        2, 2, [](double, const Vec&, const Vec&) { return Vec::Zero(2); },
        [](double, const Vec&, const Vec&) {
            Mat m(2, 2);
            m << 2.0, 0.3, 0.3, 1.0;
            return m;
        },
        1.0);
    const ConditionReport rep = check_nondegeneracy(sym, kPlan, 0.5, true);
    // Smaller eigenvalue of [[2, .3], [.3, 1]] is 1.5 - sqrt(0.34).
    CHECK(rep.min_eigenvalue == doctest::Approx(1.5 - std::sqrt(0.34)));
    CHECK(rep.passed);
}

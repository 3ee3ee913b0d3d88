#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mvsde/coeffs.hpp"

#include <cmath>

using namespace mvsde;

namespace {

ParticleEnsemble ensemble_from(const std::vector<double>& states) {
    ParticleEnsemble e = make_ensemble(static_cast<long>(states.size()), 1, {});
    for (std::size_t i = 0; i < states.size(); ++i) e.states(static_cast<long>(i), 0) = states[i];
    return e;
}

KernelCoefficients attraction_kernel() {
    // b(t,x,y) = -(x - y), sigma = 0
    return make_builtin("mean_reverting", {{"theta", 1.0}, {"s", 0.0}}, 1, 1);
}

// Direct summation oracle, independent of the mean-field implementation.
Vec direct_average_drift(const KernelCoefficients& c, double t, const Vec& x,
                         const ParticleEnsemble& e) {
    Vec acc = Vec::Zero(c.dim_state);
    for (long j = 0; j < e.count(); ++j) acc += c.drift_kernel(t, x, e.states.row(j).transpose());
    return acc / static_cast<double>(e.count());
}

} // namespace

TEST_CASE("mean-field drift of the attraction kernel") {
    const KernelCoefficients c = attraction_kernel();
    const ParticleEnsemble e = ensemble_from({1.0, 3.0});

    // Symmetric particles around x: the pulls cancel.
    Vec x(1);
    x << 2.0;
    CHECK(mean_field_drift(c, 0.0, x, e)[0] == doctest::Approx(0.0));

    // Off-center: oracle value 2 by direct summation.
    x << 0.0;
    const Vec oracle = direct_average_drift(c, 0.0, x, e);
    CHECK(oracle[0] == doctest::Approx(2.0));
    CHECK(mean_field_drift(c, 0.0, x, e)[0] == doctest::Approx(oracle[0]));
}

TEST_CASE("constant drift averages to itself") {
    const KernelCoefficients c = make_builtin("constant", {{"c", -0.7}, {"s", 1.0}}, 2, 2);
    ParticleEnsemble e = make_ensemble(5, 2, {});
    e.states.setRandom();
    const Vec avg = mean_field_drift(c, 0.3, Vec::Zero(2), e);
    CHECK(avg[0] == doctest::Approx(-0.7));
    CHECK(avg[1] == doctest::Approx(-0.7));
}

TEST_CASE("mean-field diffusion") {
    // Identity sigma averages to identity.
    const KernelCoefficients c = make_builtin("constant", {{"c", 0.0}, {"s", 1.0}}, 2, 2);
    ParticleEnsemble e = make_ensemble(4, 2, {});
    e.states.setRandom();
    const Mat avg = mean_field_diffusion(c, 0.0, Vec::Zero(2), e);
    CHECK((avg - Mat::Identity(2, 2)).norm() == doctest::Approx(0.0));

    // sigma(t,x,y) = y * I in d = 1: average is the ensemble mean, oracle 2.
    KernelCoefficients ykernel;
    ykernel.dim_state = 1;
    ykernel.dim_noise = 1;
    ykernel.drift_kernel = [](double, const Vec&, const Vec&) { return Vec::Zero(1); };
    ykernel.diffusion_kernel = [](double, const Vec&, const Vec& y) {
        return Mat(y.asDiagonal());
    };
    const ParticleEnsemble e1 = ensemble_from({1.0, 3.0});
    CHECK(mean_field_diffusion(ykernel, 0.0, Vec::Zero(1), e1)(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("empty ensemble and dimension mismatches are configuration errors") {
    const KernelCoefficients c = attraction_kernel();
    ParticleEnsemble empty;
    empty.states = Mat(0, 1);
    CHECK_THROWS_AS(mean_field_drift(c, 0.0, Vec::Zero(1), empty), ConfigError);

    const ParticleEnsemble e = ensemble_from({1.0});
    CHECK_THROWS_AS(mean_field_drift(c, 0.0, Vec::Zero(2), e), ConfigError);
}

TEST_CASE("non-finite kernel output names the particle") {
    KernelCoefficients c;
    c.dim_state = 1;
    c.dim_noise = 1;
    c.drift_kernel = [](double, const Vec&, const Vec& y) {
        Vec v(1);
        v[0] = y[0] == 3.0 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
        return v;
    };
    c.diffusion_kernel = [](double, const Vec&, const Vec&) { return Mat::Zero(1, 1); };
    const ParticleEnsemble e = ensemble_from({1.0, 3.0});
    try {
        mean_field_drift(c, 0.0, Vec::Zero(1), e);
        FAIL("expected NumericError");
    } catch (const NumericError& err) {
        CHECK(std::string(err.what()).find("particle 1") != std::string::npos);
    }
}

TEST_CASE("averaging linearity over concatenated ensembles") {
    const KernelCoefficients c = attraction_kernel();
    const ParticleEnsemble e1 = ensemble_from({0.5, -1.0, 2.0});
    const ParticleEnsemble e2 = ensemble_from({1.5, 0.25, -0.75});
    ParticleEnsemble cat = make_ensemble(6, 1, {});
    cat.states << e1.states, e2.states;

    Vec x(1);
    x << 0.3;
    const double joint = mean_field_drift(c, 0.0, x, cat)[0];
    const double split = 0.5 * (mean_field_drift(c, 0.0, x, e1)[0] +
                                mean_field_drift(c, 0.0, x, e2)[0]);
    CHECK(joint == doctest::Approx(split).epsilon(1e-12));
}

TEST_CASE("kernel evaluation is deterministic") {
    const KernelCoefficients c =
        make_builtin("bounded_measurable", {{"freq", 7.0}, {"coupling", 0.3}}, 1, 1);
    Vec x(1), y(1);
    x << 0.37;
    y << -1.2;
    const Vec a = c.drift_kernel(1.5, x, y);
    const Vec b = c.drift_kernel(1.5, x, y);
    CHECK(a[0] == b[0]); // identical bits
}

TEST_CASE("separable closures match the raw parts") {
    const KernelCoefficients c = make_builtin("linear", {{"a", -1.0}, {"beta", 0.5}, {"s", 0.2}}, 1, 1);
    REQUIRE(c.separable());
    Vec x(1), y(1);
    x << 2.0;
    y << -3.0;
    CHECK(c.drift_kernel(0.0, x, y)[0] == doctest::Approx(-2.0 - 1.5));
    CHECK(c.diffusion_kernel(0.0, x, y)(0, 0) == doctest::Approx(0.2));
}

TEST_CASE("drift offset wrapper shifts only the drift") {
    const KernelCoefficients base =
        make_builtin("bounded_measurable", {{"freq", 7.0}, {"coupling", 0.3}}, 1, 1);
    const KernelCoefficients shifted = with_drift_offset(base, Vec::Constant(1, 1.0));
    Vec x(1), y(1);
    x << 0.4;
    y << 0.9;
    CHECK(shifted.drift_kernel(0.0, x, y)[0] ==
          doctest::Approx(base.drift_kernel(0.0, x, y)[0] + 1.0));
    CHECK(shifted.diffusion_kernel(0.0, x, y)(0, 0) ==
          doctest::Approx(base.diffusion_kernel(0.0, x, y)(0, 0)));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mvsde/girsanov.hpp"
#include "mvsde/rng.hpp"

#include <cmath>

using namespace mvsde;

namespace {

SimulationSpec driftless_spec(long n, long steps, double dt, std::uint64_t seed) {
    SimulationSpec spec;
    spec.coeffs = make_builtin("constant", {{"c", 0.0}, {"s", 1.0}}, 1, 1);
    spec.particles = n;
    spec.steps = steps;
    spec.dt = dt;
    spec.seed = seed;
    spec.initial = point_mass(Vec::Zero(1));
    spec.record = n;
    return spec;
}

StateDiffusion unit_sigma() {
    return [](double, const Vec& x) { return Mat::Identity(x.size(), x.size()); };
}

} // namespace

TEST_CASE("zero drift gives unit weights for every particle") {
    const PathBundle bundle = simulate(driftless_spec(64, 16, 1.0 / 16.0, 5));
    const KernelCoefficients zero = make_builtin("constant", {{"c", 0.0}, {"s", 1.0}}, 1, 1);
    const LogWeightAccumulator acc = accumulate_logweight(bundle, zero, unit_sigma());
    const Vec w = acc.weights();
    for (long i = 0; i < w.size(); ++i) CHECK(w[i] == doctest::Approx(1.0));
}

TEST_CASE("constant drift: martingale mean and lognormal second moment") {
    const double c = 0.5, T = 1.0;
    const PathBundle bundle = simulate(driftless_spec(40000, 64, T / 64.0, 17));
    const KernelCoefficients drift = make_builtin("constant", {{"c", c}, {"s", 1.0}}, 1, 1);
    const LogWeightAccumulator acc = accumulate_logweight(bundle, drift, unit_sigma());
    const Vec gamma = acc.weights();
    std::vector<double> g(gamma.data(), gamma.data() + gamma.size());
    const MeanSe e1 = mean_with_se(g);
    CHECK(std::abs(e1.mean - 1.0) < 3.0 * e1.se);

    std::vector<double> g2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) g2[i] = g[i] * g[i];
    const MeanSe e2 = mean_with_se(g2);
    CHECK(e2.mean == doctest::Approx(std::exp(c * c * T)).epsilon(0.05));
}

TEST_CASE("mean-field drift keeps the discrete martingale property") {
    // Attraction toward the ensemble mean, averaged against the bundle's own
    // empirical measure; the integrand is adapted, so E gamma = 1 holds at
    // the discrete level too.
    const PathBundle bundle = simulate(driftless_spec(4000, 64, 1.0 / 64.0, 23));
    const KernelCoefficients drift = make_builtin("mean_reverting", {{"theta", 0.3}, {"s", 1.0}}, 1, 1);
    const LogWeightAccumulator acc = accumulate_logweight(bundle, drift, unit_sigma());
    const Vec gamma = acc.weights();
    std::vector<double> g(gamma.data(), gamma.data() + gamma.size());
    const MeanSe e1 = mean_with_se(g);
    CHECK(std::abs(e1.mean - 1.0) < 3.0 * e1.se);
}

TEST_CASE("supermartingale guard for the doubled exponent") {
    const PathBundle bundle = simulate(driftless_spec(20000, 64, 1.0 / 64.0, 29));
    const KernelCoefficients drift = make_builtin("constant", {{"c", 0.4}, {"s", 1.0}}, 1, 1);
    const LogWeightAccumulator acc = accumulate_logweight(bundle, drift, unit_sigma());
    // exp(4 M - 8 Q) has expectation at most one.
    std::vector<double> vals(static_cast<std::size_t>(acc.stoch_integral.size()));
    for (long i = 0; i < acc.stoch_integral.size(); ++i) {
        vals[static_cast<std::size_t>(i)] =
            std::exp(4.0 * acc.stoch_integral[i] - 8.0 * acc.quad_compensator[i]);
    }
    const MeanSe m = mean_with_se(vals);
    CHECK(m.mean <= 1.0 + 3.0 * m.se);
}

TEST_CASE("singular diffusion along the path is refused with location") {
    const PathBundle bundle = simulate(driftless_spec(8, 4, 0.25, 3));
    const KernelCoefficients drift = make_builtin("constant", {{"c", 1.0}, {"s", 1.0}}, 1, 1);
    StateDiffusion singular = [](double, const Vec&) { return Mat::Zero(1, 1); };
    CHECK_THROWS_AS(accumulate_logweight(bundle, drift, singular), DegeneracyError);
}

TEST_CASE("tv_upper_bound arithmetic") {
    CHECK(tv_upper_bound(1.0) == doctest::Approx(0.0));
    CHECK(tv_upper_bound(1.04) == doctest::Approx(0.2));
    CHECK(tv_upper_bound(2.0) == doctest::Approx(1.0));
    CHECK(tv_upper_bound(1.0 - 1e-12) == doctest::Approx(0.0));
    CHECK_THROWS_AS(tv_upper_bound(0.5), ConfigError);
}

TEST_CASE("rho-squared estimate") {
    const double T = 1.0;
    const PathBundle bundle = simulate(driftless_spec(2000, 32, T / 32.0, 31));
    const KernelCoefficients a = make_builtin("constant", {{"c", 0.2}, {"s", 1.0}}, 1, 1);

    SUBCASE("identical drifts give estimate one and TV bound zero") {
        const Rho2Estimate est = estimate_rho2(bundle, a, a, unit_sigma());
        CHECK(est.raw_mean == doctest::Approx(1.0));
        CHECK(est.bound == doctest::Approx(1.0));
        CHECK(tv_upper_bound(est.bound) == doctest::Approx(0.0));
    }

    SUBCASE("constant gap delta gives exp(3 delta^2 T) exactly") {
        const double delta = 0.3;
        const KernelCoefficients b = make_builtin("constant", {{"c", 0.5}, {"s", 1.0}}, 1, 1);
        const Rho2Estimate est = estimate_rho2(bundle, a, b, unit_sigma());
        CHECK(est.bound == doctest::Approx(std::exp(3.0 * delta * delta * T)).epsilon(1e-12));
        CHECK(est.raw_se == doctest::Approx(0.0)); // deterministic integrand
    }

    SUBCASE("drifts differing only on an unvisited region give bound one") {
        KernelCoefficients far_a, far_b;
        far_a.dim_state = far_a.dim_noise = 1;
        far_b.dim_state = far_b.dim_noise = 1;
        far_a.drift_kernel = [](double, const Vec&, const Vec&) { return Vec::Zero(1); };
        far_b.drift_kernel = [](double, const Vec& x, const Vec&) {
            Vec v(1);
            v[0] = std::abs(x[0]) > 50.0 ? 5.0 : 0.0;
            return v;
        };
        far_a.diffusion_kernel = [](double, const Vec&, const Vec&) { return Mat::Identity(1, 1); };
        far_b.diffusion_kernel = far_a.diffusion_kernel;
        const Rho2Estimate est = estimate_rho2(bundle, far_a, far_b, unit_sigma());
        CHECK(est.bound == doctest::Approx(1.0));
    }
}

TEST_CASE("kernel TV gap on point masses and random histograms") {
    const KernelCoefficients ker =
        make_builtin("bounded_measurable", {{"freq", 7.0}, {"coupling", 0.3}}, 1, 1);
    Vec x(1);
    x << 0.2;

    SUBCASE("equal measures have zero gap") {
        Mat atoms(3, 1);
        atoms << -1.0, 0.0, 1.0;
        const std::vector<double> w{0.25, 0.5, 0.25};
        const KernelTvGap gap = kernel_tv_gap_discrete(ker, 0.0, x, atoms, w, w);
        CHECK(gap.gap == doctest::Approx(0.0));
        CHECK(gap.tv == doctest::Approx(0.0));
        CHECK(gap.satisfied);
    }

    SUBCASE("two distinct Diracs: gap equals the kernel difference, TV is 2") {
        Mat atoms(2, 1);
        atoms << -0.8, 1.3;
        const KernelTvGap gap =
            kernel_tv_gap_discrete(ker, 0.0, x, atoms, {1.0, 0.0}, {0.0, 1.0});
        const double direct = std::abs(ker.drift_kernel(0.0, x, atoms.row(0).transpose())[0] -
                                       ker.drift_kernel(0.0, x, atoms.row(1).transpose())[0]);
        CHECK(gap.gap == doctest::Approx(direct));
        CHECK(gap.tv == doctest::Approx(2.0));
        CHECK(gap.satisfied);
    }

    SUBCASE("random histogram pairs never violate the bound") {
        SplitRng rng(71, 0);
        Mat atoms(5, 1);
        atoms << -2.0, -0.5, 0.0, 0.7, 1.9;
        for (int rep = 0; rep < 1000; ++rep) {
            std::vector<double> w1(5), w2(5);
            double s1 = 0, s2 = 0;
            for (int i = 0; i < 5; ++i) {
                w1[static_cast<std::size_t>(i)] = rng.next_uniform();
                w2[static_cast<std::size_t>(i)] = rng.next_uniform();
                s1 += w1[static_cast<std::size_t>(i)];
                s2 += w2[static_cast<std::size_t>(i)];
            }
            for (int i = 0; i < 5; ++i) {
                w1[static_cast<std::size_t>(i)] /= s1;
                w2[static_cast<std::size_t>(i)] /= s2;
            }
            CHECK(kernel_tv_gap_discrete(ker, 0.0, x, atoms, w1, w2).satisfied);
        }
    }
}

TEST_CASE("contraction iterates") {
    SUBCASE("zero start is a fixed point") {
        const ContractionTrace t = contraction_iterate(6.0, 1.0 / 24.0, 0.0);
        CHECK(t.converged);
        for (double v : t.iterates) CHECK(v == 0.0);
    }

    SUBCASE("small interval contracts from the TV ceiling") {
        const ContractionTrace t = contraction_iterate(6.0, 1.0 / 24.0, 2.0);
        CHECK(t.converged);
        CHECK_FALSE(t.diverged);
        // First iterate is sqrt(e - 1).
        CHECK(t.iterates[1] == doctest::Approx(std::sqrt(std::exp(1.0) - 1.0)));
        CHECK(t.iterates[1] == doctest::Approx(1.3108).epsilon(1e-4));
        for (std::size_t k = 1; k < t.iterates.size(); ++k) {
            CHECK(t.iterates[k] < t.iterates[k - 1]);
        }
        CHECK(t.iterates.size() <= 201);
        CHECK(t.iterates.back() < 1e-12);
    }

    SUBCASE("large interval diverges into the overflow guard") {
        const ContractionTrace t = contraction_iterate(6.0, 1.0, 2.0);
        CHECK(t.diverged);
        CHECK_FALSE(t.converged);
    }

    SUBCASE("dichotomy over a (C, T) grid inside the smallness range") {
        for (double C : {0.5, 2.0, 6.0, 12.0}) {
            for (double frac : {0.25, 0.5, 0.99}) {
                const double T = frac * std::min(0.5 / (2.0 * C), contraction_alpha_max() / C);
                for (double v0 : {0.25, 1.0, 2.0}) {
                    CHECK(contraction_iterate(C, T, v0).converged);
                }
            }
        }
    }
}

TEST_CASE("interval induction") {
    SUBCASE("24 intervals cover the unit horizon with zero verdicts") {
        const InductionReport rep = interval_induction(6.0, 1.0 / 24.0, 1.0);
        CHECK(rep.verdicts.size() == 24);
        CHECK(rep.all_zero);
        CHECK(rep.ledger.v_values.back() == 0.0);
        CHECK(rep.ledger.endpoints.back() == doctest::Approx(1.0));
        for (double v : rep.ledger.v_values) {
            CHECK(v >= 0.0);
            CHECK(v <= 2.0);
        }
    }

    SUBCASE("interval length violating the smallness window is refused") {
        CHECK_THROWS_AS(interval_induction(6.0, 0.1, 1.0), ConfigError); // 0.1 > 1/12
    }

    SUBCASE("horizon shorter than the interval gives a single verdict") {
        const InductionReport rep = interval_induction(6.0, 1.0 / 24.0, 1.0 / 48.0);
        CHECK(rep.verdicts.size() == 1);
        CHECK(rep.all_zero);
    }
}

TEST_CASE("alpha_max solves the smallness equation") {
    const double a = contraction_alpha_max();
    CHECK(std::expm1(4.0 * a) == doctest::Approx(8.0 * a).epsilon(1e-10));
    CHECK(a > 0.3);
    CHECK(a < 0.32);
}

TEST_CASE("uniqueness probe") {
    SimulationSpec spec;
    spec.coeffs = make_builtin("bounded_measurable", {}, 1, 1);
    spec.particles = 20000;
    spec.steps = 50;
    spec.dt = 0.02;
    spec.seed = 1001;
    spec.initial = point_mass(Vec::Zero(1));
    spec.record = 0;

    SUBCASE("identical configs and seeds give zero TV") {
        const ProbeReport rep = uniqueness_probe(spec, spec);
        CHECK(rep.tv_hat == doctest::Approx(0.0));
        CHECK_FALSE(rep.reject);
    }

    SUBCASE("same equation under different seeds and steps is accepted") {
        SimulationSpec other = spec;
        other.seed = 2002;
        other.steps = 100;
        other.dt = 0.01;
        const ProbeReport rep = uniqueness_probe(spec, other);
        CHECK_FALSE(rep.reject);
    }

    SUBCASE("a shifted equation is rejected") {
        SimulationSpec other = spec;
        other.seed = 2002;
        other.coeffs = with_drift_offset(spec.coeffs, Vec::Ones(1));
        const ProbeReport rep = uniqueness_probe(spec, other);
        CHECK(rep.reject);
    }
}

TEST_CASE("linear-growth surrogate bound against a direct two-run distance") {
    // Drift with |btilde| <= 0.5 (1 + |x|): two runs of the same equation,
    // the measured TV plugged into the quadratic-exponential bound must
    // dominate the measured TV itself.
    const double C = 0.5;
    SimulationSpec spec;
    spec.coeffs = make_builtin("linear", {{"a", -0.5}, {"beta", 0.0}, {"s", 1.0}}, 1, 1);
    spec.particles = 8000;
    spec.steps = 50;
    spec.dt = 0.02;
    spec.seed = 404;
    spec.initial = point_mass(Vec::Zero(1));
    spec.record = 8000;

    const PathBundle run1 = simulate(spec);
    const PathBundle run2 = spawn_independent_copy(spec);
    std::vector<double> t1(run1.terminal.states.col(0).data(),
                           run1.terminal.states.col(0).data() + spec.particles);
    std::vector<double> t2(run2.terminal.states.col(0).data(),
                           run2.terminal.states.col(0).data() + spec.particles);
    const double v_hat = histogram_tv(t1, t2).tv;

    // E exp(6 C^2 v^2 int (1+|X|^2) ds) along the first run's paths.
    std::vector<double> vals(static_cast<std::size_t>(spec.particles), 0.0);
    Vec integral = Vec::Zero(spec.particles);
    for (long k = 0; k < run1.steps(); ++k) {
        integral += (1.0 + run1.trajectories[static_cast<std::size_t>(k)]
                               .rowwise()
                               .squaredNorm()
                               .array())
                        .matrix() *
                    spec.dt;
    }
    for (long i = 0; i < spec.particles; ++i) {
        vals[static_cast<std::size_t>(i)] = std::exp(6.0 * C * C * v_hat * v_hat * integral[i]);
    }
    const MeanSe rhs = mean_with_se(vals);
    CHECK(v_hat <= tv_upper_bound(rhs.mean) + 3.0 * rhs.se);
}

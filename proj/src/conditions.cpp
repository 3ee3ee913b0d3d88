#include "mvsde/conditions.hpp"

#include "mvsde/stats.hpp"

#include <cmath>
#include <limits>

namespace mvsde {

std::string to_string(Condition c) {
    switch (c) {
        case Condition::linear_growth: return "linear_growth";
        case Condition::nondegeneracy: return "nondegeneracy";
        case Condition::nondegeneracy_strong: return "nondegeneracy_strong";
        case Condition::lipschitz_x_local_y: return "lipschitz_x_local_y";
        case Condition::lipschitz_sigma_global: return "lipschitz_sigma_global";
    }
    return "?";
}

namespace {

struct BoxPoint {
    double t;
    Vec x;
    Vec x2;
    Vec y;
};

// Point j of the plan; needs 1 + 3d quasi-random coordinates.
BoxPoint plan_point(const SamplePlan& plan, int d, long j) {
    const auto u = kronecker_point(j, 1 + 3 * d);
    BoxPoint p;
    p.t = plan.t_max * u[0];
    p.x = Vec(d);
    p.x2 = Vec(d);
    p.y = Vec(d);
    for (int a = 0; a < d; ++a) {
        p.x[a] = plan.x_radius * (2.0 * u[static_cast<std::size_t>(1 + a)] - 1.0);
        p.x2[a] = plan.x_radius * (2.0 * u[static_cast<std::size_t>(1 + d + a)] - 1.0);
        p.y[a] = plan.y_radius * (2.0 * u[static_cast<std::size_t>(1 + 2 * d + a)] - 1.0);
    }
    return p;
}

} // namespace

ConditionReport check_linear_growth(const KernelCoefficients& coeffs, const SamplePlan& plan,
                                    double tolerance) {
    require(coeffs.dim_state <= 3, "check: state dimension above sweep limit");
    ConditionReport rep;
    rep.condition = Condition::linear_growth;
    rep.tolerance = tolerance;
    const double C = coeffs.growth_constant;
    require(C >= 0.0, "check_linear_growth: negative growth constant");
    for (long j = 0; j < plan.count; ++j) {
        const BoxPoint p = plan_point(plan, coeffs.dim_state, j);
        const Vec b = coeffs.drift_kernel(p.t, p.x, p.y);
        const Mat s = coeffs.diffusion_kernel(p.t, p.x, p.y);
        const double lhs = b.norm() + s.norm(); // Frobenius
        const double rhs = C * (1.0 + p.x.norm());
        const double ratio = rhs > 0.0 ? lhs / rhs
                                       : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > rep.worst_ratio) {
            rep.worst_ratio = ratio;
            rep.worst_witness = {p.t, p.x, Vec(), p.y};
        }
        ++rep.samples_checked;
    }
    rep.passed = rep.worst_ratio <= 1.0 + tolerance;
    return rep;
}

ConditionReport check_nondegeneracy(const KernelCoefficients& coeffs, const SamplePlan& plan,
                                    double floor_value, bool strong) {
    require(coeffs.dim_state <= 3, "check: state dimension above sweep limit");
    ConditionReport rep;
    rep.condition = strong ? Condition::nondegeneracy_strong : Condition::nondegeneracy;
    rep.tolerance = 0.0;
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (long j = 0; j < plan.count; ++j) {
        const BoxPoint p = plan_point(plan, coeffs.dim_state, j);
        const Mat s = coeffs.diffusion_kernel(p.t, p.x, p.y);
        Mat gram;
        if (strong) {
            require(s.rows() == s.cols(), "nondegeneracy_strong: requires square sigma");
            gram = 0.5 * (s + s.transpose());
        } else {
            gram = s * s.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(gram);
        const double lam = es.eigenvalues().minCoeff();
        if (lam < rep.min_eigenvalue) {
            rep.min_eigenvalue = lam;
            rep.worst_witness = {p.t, p.x, Vec(), p.y};
        }
        ++rep.samples_checked;
    }
    rep.worst_ratio = rep.min_eigenvalue > 0.0
                          ? floor_value / rep.min_eigenvalue
                          : (floor_value > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.passed = rep.min_eigenvalue >= floor_value;
    return rep;
}

ConditionReport check_lipschitz(const KernelCoefficients& coeffs, const SamplePlan& plan,
                                Condition variant, double claimed_constant, double tolerance) {
    require(coeffs.dim_state <= 3, "check: state dimension above sweep limit");
    require(variant == Condition::lipschitz_x_local_y ||
                variant == Condition::lipschitz_sigma_global,
            "check_lipschitz: not a Lipschitz variant");
    require(claimed_constant > 0.0, "check_lipschitz: claimed constant must be positive");
    ConditionReport rep;
    rep.condition = variant;
    rep.tolerance = tolerance;
    auto probe = [&](double t, const Vec& x, const Vec& x2, const Vec& y) {
        const double dx = (x - x2).norm();
        if (dx < 1e-12) return;
        const Mat s1 = coeffs.diffusion_kernel(t, x, y);
        const Mat s2 = coeffs.diffusion_kernel(t, x2, y);
        double lhs = (s1 - s2).norm();
        double weight = 1.0;
        if (variant == Condition::lipschitz_x_local_y) {
            const Vec b1 = coeffs.drift_kernel(t, x, y);
            const Vec b2 = coeffs.drift_kernel(t, x2, y);
            lhs += (b1 - b2).norm();
            weight = 1.0 + y.squaredNorm();
        }
        const double ratio = lhs / (claimed_constant * weight * dx);
        if (ratio > rep.worst_ratio) {
            rep.worst_ratio = ratio;
            rep.worst_witness = {t, x, x2, y};
        }
        ++rep.samples_checked;
    };
    for (long j = 0; j < plan.count; ++j) {
        const BoxPoint p = plan_point(plan, coeffs.dim_state, j);
        // Difference quotients at the quasi-random pair, across shrinking
        // gaps toward x, and through the reflection -x (so jumps across the
        // coordinate planes are seen).
        probe(p.t, p.x, p.x2, p.y);
        for (double scale : {1e-1, 1e-2, 1e-3}) {
            probe(p.t, p.x, Vec(p.x + scale * (p.x2 - p.x)), p.y);
        }
        probe(p.t, p.x, Vec(-p.x), p.y);
    }
    rep.passed = rep.worst_ratio <= 1.0 + tolerance;
    return rep;
}

std::map<Condition, bool> builtin_condition_verdicts(const std::string& name) {
    // Verdicts for default parameters on the standard plan box (radius 5).
    std::map<Condition, bool> v;
    if (name == "constant") {
        v[Condition::linear_growth] = true;
        v[Condition::nondegeneracy] = true;
        v[Condition::lipschitz_x_local_y] = true;
        v[Condition::lipschitz_sigma_global] = true;
    } else if (name == "linear") {
        // Default beta = 0: drift a*x alone satisfies the growth bound.
        v[Condition::linear_growth] = true;
        v[Condition::nondegeneracy] = true;
        v[Condition::lipschitz_x_local_y] = true;
        v[Condition::lipschitz_sigma_global] = true;
    } else if (name == "mean_reverting") {
        // Kernel -theta(x - y) grows in y, which the uniform-in-y growth
        // bound does not allow; only the averaged coefficient is linear.
        v[Condition::linear_growth] = false;
        v[Condition::nondegeneracy] = true;
        v[Condition::lipschitz_x_local_y] = true;
        v[Condition::lipschitz_sigma_global] = true;
    } else if (name == "step_drift") {
        v[Condition::linear_growth] = true;
        v[Condition::nondegeneracy] = true;
        v[Condition::lipschitz_x_local_y] = false; // sign(x) jumps
        v[Condition::lipschitz_sigma_global] = true;
    } else if (name == "bounded_measurable") {
        v[Condition::linear_growth] = true;
        v[Condition::nondegeneracy] = true;
        v[Condition::lipschitz_x_local_y] = false; // sign(sin(freq x)) jumps
        v[Condition::lipschitz_sigma_global] = true;
    } else {
        throw ConfigError("unknown builtin coefficient family: " + name);
    }
    return v;
}

} // namespace mvsde

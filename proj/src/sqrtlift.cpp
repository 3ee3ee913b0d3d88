#include "mvsde/sqrtlift.hpp"

#include <cmath>

namespace mvsde {

double default_eig_floor(const Mat& a) {
    return 1e-8 * a.trace() / static_cast<double>(a.rows());
}

Mat sym_sqrt(const Mat& a, double floor_value) {
    require(a.rows() == a.cols(), "sym_sqrt: matrix must be square");
    require((a - a.transpose()).norm() <= 1e-12 * std::max(1.0, a.norm()),
            "sym_sqrt: matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    const double lam_min = es.eigenvalues().minCoeff();
    if (lam_min < floor_value) {
        throw DegeneracyError("sym_sqrt: smallest eigenvalue " + std::to_string(lam_min) +
                              " below floor " + std::to_string(floor_value));
    }
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

LiftOperators build_lift(const Mat& sigma, double floor_value) {
    const long d = sigma.rows();
    const long d1 = sigma.cols();
    require(d1 >= d, "build_lift: need d1 >= d");
    LiftOperators lift;
    lift.a = sigma * sigma.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(lift.a);
    lift.min_eig_a = es.eigenvalues().minCoeff();
    if (lift.min_eig_a < floor_value) {
        throw DegeneracyError("build_lift: sigma sigma^T eigenvalue " +
                              std::to_string(lift.min_eig_a) + " below floor " +
                              std::to_string(floor_value));
    }
    lift.sqrt_a = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
                  es.eigenvectors().transpose();
    // p = sqrt_a^{-1} sigma via the same eigenbasis.
    const Mat inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                         es.eigenvectors().transpose();
    lift.p = inv_sqrt * sigma;
    lift.projector = lift.p.transpose() * lift.p;
    lift.complement = Mat::Identity(d1, d1) - lift.projector;
    return lift;
}

std::vector<Vec> synthesize_w0(const std::vector<LiftOperators>& lifts,
                               const std::vector<Vec>& dw_tilde, const std::vector<Vec>& dw_bar) {
    require(!lifts.empty(), "synthesize_w0: need at least one lift");
    require(dw_tilde.size() == dw_bar.size(), "synthesize_w0: increment lengths differ");
    require(lifts.size() == 1 || lifts.size() == dw_tilde.size(),
            "synthesize_w0: one lift total or one per step");
    std::vector<Vec> out;
    out.reserve(dw_tilde.size());
    for (std::size_t k = 0; k < dw_tilde.size(); ++k) {
        const LiftOperators& L = lifts.size() == 1 ? lifts.front() : lifts[k];
        require(dw_tilde[k].size() == L.p.rows(), "synthesize_w0: dW~ dimension mismatch");
        require(dw_bar[k].size() == L.p.cols(), "synthesize_w0: dW- dimension mismatch");
        out.emplace_back(L.p.transpose() * dw_tilde[k] + L.complement * dw_bar[k]);
    }
    return out;
}

LevyReport levy_check(const std::vector<Vec>& w0_increments, double horizon) {
    require(!w0_increments.empty(), "levy_check: no increments");
    require(horizon > 0.0, "levy_check: horizon must be positive");
    const long d1 = w0_increments.front().size();
    LevyReport rep;
    rep.covariation = Mat::Zero(d1, d1);
    for (const Vec& dw : w0_increments) {
        rep.covariation.noalias() += dw * dw.transpose();
    }
    rep.steps = static_cast<long>(w0_increments.size());
    rep.horizon = horizon;
    for (long i = 0; i < d1; ++i) {
        rep.max_diag_reldev =
            std::max(rep.max_diag_reldev, std::abs(rep.covariation(i, i) - horizon) / horizon);
        for (long j = 0; j < d1; ++j) {
            if (i != j) rep.max_offdiag = std::max(rep.max_offdiag, std::abs(rep.covariation(i, j)));
        }
    }
    return rep;
}

double reconstruction_check(const std::vector<Mat>& sigma_per_step,
                            const std::vector<LiftOperators>& lifts,
                            const std::vector<Vec>& dw_tilde, const std::vector<Vec>& dw0) {
    require(dw_tilde.size() == dw0.size(), "reconstruction_check: increment lengths differ");
    require(sigma_per_step.size() == 1 || sigma_per_step.size() == dw0.size(),
            "reconstruction_check: one sigma total or one per step");
    require(lifts.size() == 1 || lifts.size() == dw0.size(),
            "reconstruction_check: one lift total or one per step");
    double worst = 0.0;
    for (std::size_t k = 0; k < dw0.size(); ++k) {
        const Mat& sigma = sigma_per_step.size() == 1 ? sigma_per_step.front() : sigma_per_step[k];
        const LiftOperators& L = lifts.size() == 1 ? lifts.front() : lifts[k];
        const Vec defect = sigma * dw0[k] - L.sqrt_a * dw_tilde[k];
        worst = std::max(worst, defect.norm());
    }
    return worst;
}

} // namespace mvsde

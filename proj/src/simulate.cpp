#include "mvsde/simulate.hpp"

#include "mvsde/parallel.hpp"
#include "mvsde/rng.hpp"
#include "mvsde/stats.hpp"

#include <atomic>
#include <cmath>
#include <limits>

namespace mvsde {

InitialLaw point_mass(const Vec& x0) {
    InitialLaw law;
    law.type = InitialLaw::Type::point;
    law.mean = x0;
    return law;
}

InitialLaw gaussian_law(const Vec& mean, const Mat& cov) {
    require(cov.rows() == mean.size() && cov.cols() == mean.size(),
            "initial law: covariance dimension mismatch");
    InitialLaw law;
    law.type = InitialLaw::Type::gaussian;
    law.mean = mean;
    law.cov = cov;
    return law;
}

namespace {

[[noreturn]] void throw_step_error(long step, long particle) {
    throw NumericError("euler_step: non-finite state at step " + std::to_string(step) +
                       " particle " + std::to_string(particle));
}

// Stack buffers in the separable fast path cap the dimensions.
void check_fast_dims(int d, int d1) {
    require(d <= 8 && d * d1 <= 64, "separable fast path supports d <= 8, d*d1 <= 64");
}

} // namespace

ParticleEnsemble euler_step(const ParticleEnsemble& ensemble, const KernelCoefficients& coeffs,
                            double dt, const Mat& noise) {
    require(dt > 0.0, "euler_step: dt must be positive");
    require(noise.rows() == ensemble.count() && noise.cols() == coeffs.dim_noise,
            "euler_step: noise block must be N x d1");
    require(ensemble.dim() == coeffs.dim_state, "euler_step: dimension mismatch");

    ParticleEnsemble post = ensemble;
    const long n = ensemble.count();
    const int d = coeffs.dim_state;
    const int d1 = coeffs.dim_noise;
    const double t = ensemble.time;
    // Step index inferred from the ensemble clock, so standalone error
    // messages line up with simulate()'s numbering.
    const long step_index = static_cast<long>(std::llround(t / dt));

    if (coeffs.separable()) {
        check_fast_dims(d, d1);
        const MeanFieldSnapshot snap = mean_field_snapshot(coeffs, t, ensemble);
        for (long i = 0; i < n; ++i) {
            if (!ensemble.alive[static_cast<std::size_t>(i)]) continue;
            double xbuf[64], bbuf[8], sbuf[64];
            Eigen::Map<Vec>(xbuf, d) = ensemble.states.row(i).transpose();
            coeffs.drift_state_raw(t, xbuf, bbuf);
            coeffs.diffusion_state_raw(t, xbuf, sbuf);
            for (int c = 0; c < d; ++c) {
                double drift = bbuf[c] + snap.drift_field_mean[c];
                double diff = 0.0;
                for (int e = 0; e < d1; ++e) {
                    diff += (sbuf[c * d1 + e] + snap.diffusion_field_mean(c, e)) * noise(i, e);
                }
                xbuf[c] += drift * dt + diff;
            }
            for (int c = 0; c < d; ++c) {
                if (!std::isfinite(xbuf[c])) throw_step_error(step_index, i);
                post.states(i, c) = xbuf[c];
            }
        }
    } else {
        for (long i = 0; i < n; ++i) {
            if (!ensemble.alive[static_cast<std::size_t>(i)]) continue;
            Vec x = ensemble.states.row(i).transpose();
            const Vec b = mean_field_drift(coeffs, t, x, ensemble);
            const Mat s = mean_field_diffusion(coeffs, t, x, ensemble);
            x += b * dt + s * noise.row(i).transpose();
            if (!x.allFinite()) throw_step_error(step_index, i);
            post.states.row(i) = x.transpose();
        }
    }
    post.time = ensemble.time + dt;
    return post;
}

PathBundle simulate(const SimulationSpec& spec) {
    require(spec.particles >= 1, "simulate: need N >= 1");
    require(spec.steps >= 0, "simulate: negative step count");
    require(spec.steps == 0 || spec.dt > 0.0, "simulate: dt must be positive");
    const int d = spec.coeffs.dim_state;
    const int d1 = spec.coeffs.dim_noise;
    require(spec.initial.mean.size() == d, "simulate: initial law dimension mismatch");

    const long n = spec.particles;
    const long record = spec.record < 0 ? n : std::min(spec.record, n);
    const bool stopping = spec.stopping_radius.has_value();
    const double radius = stopping ? *spec.stopping_radius : 0.0;

    ParticleEnsemble ens = make_ensemble(n, d, {spec.seed, spec.stream_offset});

    // Per-particle streams persist across the whole run; initial-law draws
    // come first, then d1 normals per step.
    std::vector<SplitRng> streams;
    streams.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        streams.emplace_back(spec.seed, spec.stream_offset + static_cast<std::uint64_t>(i));
    }

    Mat chol; // factor of the gaussian covariance
    if (spec.initial.type == InitialLaw::Type::gaussian) {
        Eigen::LLT<Mat> llt(spec.initial.cov);
        require(llt.info() == Eigen::Success || spec.initial.cov.norm() == 0.0,
                "simulate: initial covariance not positive definite");
        chol = spec.initial.cov.norm() == 0.0 ? Mat::Zero(d, d) : Mat(llt.matrixL());
    }
    parallel_for(n, spec.workers, [&](long i) {
        if (spec.initial.type == InitialLaw::Type::point) {
            ens.states.row(i) = spec.initial.mean.transpose();
        } else {
            Vec z(d);
            for (int c = 0; c < d; ++c) z[c] = streams[static_cast<std::size_t>(i)].next_normal();
            ens.states.row(i) = (spec.initial.mean + chol * z).transpose();
        }
    });

    PathBundle bundle;
    bundle.dt = spec.dt;
    bundle.record_count = record;
    bundle.time_grid.resize(static_cast<std::size_t>(spec.steps) + 1);
    for (long k = 0; k <= spec.steps; ++k) bundle.time_grid[static_cast<std::size_t>(k)] = spec.dt * static_cast<double>(k);
    bundle.trajectories.reserve(static_cast<std::size_t>(spec.steps) + 1);
    bundle.noise_increments.reserve(static_cast<std::size_t>(spec.steps));
    bundle.trajectories.push_back(ens.states.topRows(record));
    if (stopping) {
        bundle.stopping_radius = radius;
        bundle.exit_step.assign(static_cast<std::size_t>(n), spec.steps + 1);
        for (long i = 0; i < n; ++i) {
            if (ens.states.row(i).norm() >= radius) {
                bundle.exit_step[static_cast<std::size_t>(i)] = 0;
                ens.alive[static_cast<std::size_t>(i)] = 0;
            }
        }
    }

    const double sqrt_dt = std::sqrt(spec.dt);
    Mat noise(n, d1);
    const bool fast = spec.coeffs.separable();
    if (fast) check_fast_dims(d, d1);

    for (long k = 0; k < spec.steps; ++k) {
        const double t = bundle.time_grid[static_cast<std::size_t>(k)];
        // Noise is always drawn, stopped particles included, so stopping
        // choices never shift anyone else's stream.
        parallel_for(n, spec.workers, [&](long i) {
            for (int e = 0; e < d1; ++e) {
                noise(i, e) = sqrt_dt * streams[static_cast<std::size_t>(i)].next_normal();
            }
        });

        const ParticleEnsemble pre = ens; // empirical measure snapshot
        std::atomic<bool> failed{false};
        if (fast) {
            const MeanFieldSnapshot snap = mean_field_snapshot(spec.coeffs, t, pre);
            parallel_for(n, spec.workers, [&](long i) {
                if (!pre.alive[static_cast<std::size_t>(i)]) return;
                double xbuf[64], bbuf[8], sbuf[64];
                Eigen::Map<Vec>(xbuf, d) = pre.states.row(i).transpose();
                spec.coeffs.drift_state_raw(t, xbuf, bbuf);
                spec.coeffs.diffusion_state_raw(t, xbuf, sbuf);
                for (int c = 0; c < d; ++c) {
                    double drift = bbuf[c] + snap.drift_field_mean[c];
                    double diff = 0.0;
                    for (int e = 0; e < d1; ++e) {
                        diff += (sbuf[c * d1 + e] + snap.diffusion_field_mean(c, e)) * noise(i, e);
                    }
                    xbuf[c] += drift * spec.dt + diff;
                }
                for (int c = 0; c < d; ++c) {
                    if (!std::isfinite(xbuf[c])) failed.store(true, std::memory_order_relaxed);
                    ens.states(i, c) = xbuf[c];
                }
            });
        } else {
            parallel_for(n, spec.workers, [&](long i) {
                if (!pre.alive[static_cast<std::size_t>(i)]) return;
                Vec x = pre.states.row(i).transpose();
                const Vec b = mean_field_drift(spec.coeffs, t, x, pre);
                const Mat s = mean_field_diffusion(spec.coeffs, t, x, pre);
                x += b * spec.dt + s * noise.row(i).transpose();
                if (!x.allFinite()) failed.store(true, std::memory_order_relaxed);
                ens.states.row(i) = x.transpose();
            });
        }
        if (failed.load()) {
            for (long i = 0; i < n; ++i) {
                if (!ens.states.row(i).allFinite()) throw_step_error(k, i);
            }
        }
        ens.time = bundle.time_grid[static_cast<std::size_t>(k) + 1];

        if (stopping) {
            for (long i = 0; i < n; ++i) {
                if (!ens.alive[static_cast<std::size_t>(i)]) continue;
                if (ens.states.row(i).norm() >= radius) {
                    ens.alive[static_cast<std::size_t>(i)] = 0;
                    bundle.exit_step[static_cast<std::size_t>(i)] = k + 1;
                }
            }
        }

        bundle.noise_increments.push_back(noise.topRows(record));
        bundle.trajectories.push_back(ens.states.topRows(record));
    }

    if (stopping) {
        long exited = 0;
        for (long i = 0; i < n; ++i) {
            if (bundle.exit_step[static_cast<std::size_t>(i)] <= spec.steps) ++exited;
        }
        bundle.exit_fraction = static_cast<double>(exited) / static_cast<double>(n);
    }
    bundle.terminal = std::move(ens);
    return bundle;
}

PathBundle spawn_independent_copy(const SimulationSpec& spec, long offset_particles) {
    const long shift = offset_particles < 0 ? spec.particles : offset_particles;
    require(shift != 0, "spawn_independent_copy: requested the same seed lineage");
    SimulationSpec copy = spec;
    copy.stream_offset = spec.stream_offset + static_cast<std::uint64_t>(shift);
    return simulate(copy);
}

PathBundle apply_stopping(const PathBundle& bundle, double radius) {
    require(radius > 0.0, "apply_stopping: radius must be positive");
    PathBundle out = bundle;
    const long m = bundle.record_count;
    const long steps = bundle.steps();
    require(static_cast<long>(bundle.trajectories.size()) == steps + 1,
            "apply_stopping: bundle lacks recorded trajectories");
    out.stopping_radius = radius;
    out.exit_step.assign(static_cast<std::size_t>(m), steps + 1);
    long exited = 0;
    for (long i = 0; i < m; ++i) {
        for (long k = 0; k <= steps; ++k) {
            if (bundle.trajectories[static_cast<std::size_t>(k)].row(i).norm() >= radius) {
                out.exit_step[static_cast<std::size_t>(i)] = k;
                ++exited;
                // Freeze at the exit state from that grid time on.
                for (long kk = k + 1; kk <= steps; ++kk) {
                    out.trajectories[static_cast<std::size_t>(kk)].row(i) =
                        bundle.trajectories[static_cast<std::size_t>(k)].row(i);
                }
                if (i < out.terminal.count()) {
                    out.terminal.states.row(i) = bundle.trajectories[static_cast<std::size_t>(k)].row(i);
                    out.terminal.alive[static_cast<std::size_t>(i)] = 0;
                }
                break;
            }
        }
    }
    out.exit_fraction = m > 0 ? static_cast<double>(exited) / static_cast<double>(m) : 0.0;
    return out;
}

MomentReport moment_report(const PathBundle& bundle) {
    MomentReport rep;
    const long steps = bundle.steps();
    const long m = bundle.record_count;
    require(m >= 1 && !bundle.trajectories.empty(), "moment_report: no recorded trajectories");

    for (long k = 0; k <= steps; ++k) {
        const Mat& snap = bundle.trajectories[static_cast<std::size_t>(k)];
        const Vec sq = snap.rowwise().squaredNorm();
        rep.sup_m2 = std::max(rep.sup_m2, sq.mean());
        rep.sup_m4 = std::max(rep.sup_m4, sq.array().square().mean());
    }

    const Vec sq0 = bundle.trajectories.front().rowwise().squaredNorm();
    const double m2_0 = sq0.mean();
    const double m4_0 = sq0.array().square().mean();
    rep.c2_hat = rep.sup_m2 / (1.0 + m2_0);
    rep.c4_hat = rep.sup_m4 / (1.0 + m4_0);

    // Fourth moments of increments over h = dt, 2dt, 4dt, 8dt (as the grid
    // allows), averaged over particles and start times.
    for (long lag = 1; lag <= 8 && lag <= steps; lag *= 2) {
        double acc = 0.0;
        long cnt = 0;
        for (long k = 0; k + lag <= steps; ++k) {
            const Mat diff = bundle.trajectories[static_cast<std::size_t>(k + lag)] -
                             bundle.trajectories[static_cast<std::size_t>(k)];
            acc += diff.rowwise().squaredNorm().array().square().sum();
            cnt += m;
        }
        rep.ladder_h.push_back(static_cast<double>(lag) * bundle.dt);
        rep.ladder_m4.push_back(acc / static_cast<double>(cnt));
    }

    bool all_zero = true;
    for (double v : rep.ladder_m4) all_zero = all_zero && v == 0.0;
    if (all_zero || rep.ladder_m4.size() < 2) {
        rep.increment_exponent = std::numeric_limits<double>::quiet_NaN();
    } else {
        rep.increment_exponent = loglog_slope(rep.ladder_h, rep.ladder_m4);
        for (std::size_t j = 0; j < rep.ladder_h.size(); ++j) {
            rep.c_incr = std::max(rep.c_incr, rep.ladder_m4[j] / (rep.ladder_h[j] * rep.ladder_h[j]));
        }
    }
    return rep;
}

} // namespace mvsde

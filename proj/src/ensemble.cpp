#include "mvsde/ensemble.hpp"

#include <cstdio>
#include <ostream>

namespace mvsde {

long ParticleEnsemble::alive_count() const {
    long n = 0;
    for (auto a : alive) n += a ? 1 : 0;
    return n;
}

ParticleEnsemble make_ensemble(long n, int dim, SeedLineage lineage) {
    require(n >= 1, "ensemble: need at least one particle");
    require(dim >= 1, "ensemble: dimension must be positive");
    ParticleEnsemble e;
    e.states = Mat::Zero(n, dim);
    e.alive.assign(static_cast<std::size_t>(n), 1);
    e.lineage = lineage;
    return e;
}

bool PathBundle::alive_at(long particle, long step) const {
    if (exit_step.empty()) return true;
    return step < exit_step[static_cast<std::size_t>(particle)];
}

void PathBundle::write_csv(std::ostream& os) const {
    const int d = trajectories.empty() ? terminal.dim() : static_cast<int>(trajectories.front().cols());
    os << "step,time,particle_id";
    for (int c = 0; c < d; ++c) os << ",x_" << c;
    os << "\n";
    char buf[64];
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
        const Mat& snap = trajectories[k];
        for (long i = 0; i < snap.rows(); ++i) {
            os << k;
            std::snprintf(buf, sizeof(buf), "%.17g", time_grid[k]);
            os << ',' << buf << ',' << i;
            for (long c = 0; c < snap.cols(); ++c) {
                std::snprintf(buf, sizeof(buf), "%.17g", snap(i, c));
                os << ',' << buf;
            }
            os << "\n";
        }
    }
}

} // namespace mvsde

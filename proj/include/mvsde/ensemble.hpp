#pragma once

#include "mvsde/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

namespace mvsde {

// Master seed plus the stream-index offset of this ensemble. Particle i draws
// from stream (stream_offset + i); an independent copy shifts the offset so
// the stream sets are disjoint.
struct SeedLineage {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_offset = 0;
};

struct ParticleEnsemble {
    Mat states;                   // N x d, one row per particle
    double time = 0.0;
    std::vector<std::uint8_t> alive; // cleared once a particle exits the stopping ball
    SeedLineage lineage;

    long count() const { return states.rows(); }
    int dim() const { return static_cast<int>(states.cols()); }
    long alive_count() const;
};

ParticleEnsemble make_ensemble(long n, int dim, SeedLineage lineage);

// Trajectories and driving noise on a uniform grid for the first
// record_count particles, plus the full terminal ensemble. Noise is retained
// so Girsanov weights can be accumulated on the same increments.
struct PathBundle {
    std::vector<double> time_grid;        // K+1 entries, t_k = k*dt
    double dt = 0.0;
    std::vector<Mat> trajectories;        // K+1 entries of record_count x d
    std::vector<Mat> noise_increments;    // K entries of record_count x d1
    ParticleEnsemble terminal;
    long record_count = 0;

    // Stopping bookkeeping (filled when a radius is active): first grid index
    // whose running sup-norm reached the radius; steps()+1 if never.
    std::vector<long> exit_step;
    double stopping_radius = std::numeric_limits<double>::infinity();
    double exit_fraction = 0.0;

    long steps() const { return static_cast<long>(time_grid.empty() ? 0 : time_grid.size() - 1); }
    double horizon() const { return time_grid.empty() ? 0.0 : time_grid.back(); }
    bool alive_at(long particle, long step) const;

    // Columns: step,time,particle_id,x_0..x_{d-1}. Stable %.17g formatting.
    void write_csv(std::ostream& os) const;
};

} // namespace mvsde

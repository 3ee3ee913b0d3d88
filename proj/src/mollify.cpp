#include "mvsde/mollify.hpp"

#include <cmath>
#include <cstring>

namespace mvsde {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    require(n >= 1, "gauss_legendre: need >= 1 node");
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    const double pi = 3.14159265358979323846;
    for (int k = 0; k < (n + 1) / 2; ++k) {
        double x = std::cos(pi * (k + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence for P_n(x) and P_n'(x).
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[static_cast<std::size_t>(k)] = -x;
        nodes[static_cast<std::size_t>(n - 1 - k)] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[static_cast<std::size_t>(k)] = w;
        weights[static_cast<std::size_t>(n - 1 - k)] = w;
    }
}

BumpQuadrature bump_quadrature(int nodes) {
    require(nodes >= 3, "bump_quadrature: need at least 3 nodes");
    BumpQuadrature q;
    std::vector<double> w;
    gauss_legendre(nodes, q.nodes, w);
    q.weights.resize(w.size());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double u = q.nodes[i];
        const double bump = std::exp(-1.0 / (1.0 - u * u));
        q.weights[i] = w[i] * bump;
        total += q.weights[i];
    }
    for (auto& wi : q.weights) wi /= total;
    return q;
}

Mollifier make_mollifier(int level, int quadrature_nodes) {
    require(level >= 1, "mollifier: level must be positive");
    require(quadrature_nodes >= 3, "mollifier: need at least 3 quadrature nodes");
    Mollifier m;
    m.level = level;
    m.h_t = m.h_x = m.h_y = 1.0 / static_cast<double>(level);
    m.quadrature_nodes = quadrature_nodes;
    return m;
}

namespace {

constexpr int kMaxDim = 8;

// Iterates over the q^dim tensor grid of shifted points around `center`,
// accumulating weight * fn(point) into acc[0..len).
template <typename EvalFn>
void tensor_convolve(const BumpQuadrature& q, double h, const double* center, int dim,
                     double* acc, int len, double outer_weight, EvalFn&& fn) {
    const int nq = static_cast<int>(q.nodes.size());
    int idx[kMaxDim] = {0};
    double point[kMaxDim];
    double scratch[kMaxDim * kMaxDim];
    for (;;) {
        double w = outer_weight;
        for (int a = 0; a < dim; ++a) {
            w *= q.weights[static_cast<std::size_t>(idx[a])];
            point[a] = center[a] - q.nodes[static_cast<std::size_t>(idx[a])] * h;
        }
        fn(point, scratch);
        for (int c = 0; c < len; ++c) acc[c] += w * scratch[c];
        int a = 0;
        while (a < dim && ++idx[a] == nq) idx[a++] = 0;
        if (a == dim) break;
    }
}

struct RawPartMollifier {
    BumpQuadrature qt, qs;
    double h_t = 0.0, h_s = 0.0;
    int dim = 0;
    int len = 0;
    RawVecFn base;
    bool base_time_independent = false;
    bool zero_below_t0 = true;     // negative-time extension: zero (drift) ...
    Vec neg_time_value;            // ... or this constant (diffusion identity)

    RawVecFn make() const {
        auto self = *this;
        return [self](double t, const double* x, double* out) {
            std::memset(out, 0, sizeof(double) * static_cast<std::size_t>(self.len));
            if (self.base_time_independent) {
                // Base ignores t for t >= 0, so the time convolution reduces
                // to a scalar split between the kernel and its negative-time
                // extension.
                double s_pos = 0.0;
                for (std::size_t i = 0; i < self.qt.nodes.size(); ++i) {
                    if (t - self.qt.nodes[i] * self.h_t >= 0.0) s_pos += self.qt.weights[i];
                }
                if (s_pos > 0.0) {
                    tensor_convolve(self.qs, self.h_s, x, self.dim, out, self.len, s_pos,
                                    [&](const double* p, double* scratch) {
                                        self.base(t, p, scratch);
                                    });
                }
                if (s_pos < 1.0 && !self.zero_below_t0) {
                    for (int c = 0; c < self.len; ++c)
                        out[c] += (1.0 - s_pos) * self.neg_time_value[c];
                }
                return;
            }
            for (std::size_t i = 0; i < self.qt.nodes.size(); ++i) {
                const double ts = t - self.qt.nodes[i] * self.h_t;
                const double wt = self.qt.weights[i];
                if (ts < 0.0) {
                    if (!self.zero_below_t0) {
                        for (int c = 0; c < self.len; ++c)
                            out[c] += wt * self.neg_time_value[c];
                    }
                    continue;
                }
                tensor_convolve(self.qs, self.h_s, x, self.dim, out, self.len, wt,
                                [&](const double* p, double* scratch) {
                                    self.base(ts, p, scratch);
                                });
            }
        };
    }
};

Vec flat_rect_identity(int d, int d1) {
    Vec v = Vec::Zero(d * d1);
    for (int i = 0; i < std::min(d, d1); ++i) v[i * d1 + i] = 1.0;
    return v;
}

} // namespace

KernelCoefficients mollify(const KernelCoefficients& base, const Mollifier& m) {
    require(m.quadrature_nodes >= 3, "mollify: need at least 3 quadrature nodes");
    const int d = base.dim_state;
    const int d1 = base.dim_noise;
    require(d <= kMaxDim && d * d1 <= kMaxDim * kMaxDim, "mollify: dimension too large");
    const BumpQuadrature q = bump_quadrature(m.quadrature_nodes);

    KernelCoefficients out;
    out.dim_state = d;
    out.dim_noise = d1;
    out.diffusion_y_free = base.diffusion_y_free;
    out.time_independent = false;
    // The smoothed kernel keeps the growth bound up to the bandwidth shift.
    out.growth_constant = base.growth_constant * (1.0 + m.h_x);

    if (base.separable()) {
        RawPartMollifier ds{q, q, m.h_t, m.h_x, d, d, base.drift_state_raw,
                            base.time_independent, true, Vec()};
        RawPartMollifier df{q, q, m.h_t, m.h_y, d, d, base.drift_field_raw,
                            base.time_independent, true, Vec()};
        RawPartMollifier ss{q, q, m.h_t, m.h_x, d, d * d1, base.diffusion_state_raw,
                            base.time_independent, false, flat_rect_identity(d, d1)};
        RawPartMollifier sf{q, q, m.h_t, m.h_y, d, d * d1, base.diffusion_field_raw,
                            base.time_independent, true, Vec()};
        out.drift_state_raw = ds.make();
        out.drift_field_raw = df.make();
        out.diffusion_state_raw = ss.make();
        out.diffusion_field_raw = sf.make();
        // Mirror the closures off the raw parts.
        auto dsr = out.drift_state_raw;
        auto dfr = out.drift_field_raw;
        auto ssr = out.diffusion_state_raw;
        auto sfr = out.diffusion_field_raw;
        out.drift_kernel = [d, dsr, dfr](double t, const Vec& x, const Vec& y) {
            Vec a(d), b(d);
            dsr(t, x.data(), a.data());
            dfr(t, y.data(), b.data());
            return Vec(a + b);
        };
        out.diffusion_kernel = [d, d1, ssr, sfr](double t, const Vec& x, const Vec& y) {
            Vec a(d * d1), b(d * d1);
            ssr(t, x.data(), a.data());
            sfr(t, y.data(), b.data());
            Vec s = a + b;
            return Mat(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                      Eigen::RowMajor>>(s.data(), d, d1));
        };
        return out;
    }

    // Generic tensor-product path: convolve jointly in (t, x, y).
    auto drift = base.drift_kernel;
    auto diffusion = base.diffusion_kernel;
    const double ht = m.h_t, hx = m.h_x, hy = m.h_y;
    out.drift_kernel = [=](double t, const Vec& x, const Vec& y) {
        const int nq = static_cast<int>(q.nodes.size());
        Vec acc = Vec::Zero(d);
        Vec xs(d), ys(d);
        std::vector<int> idx(static_cast<std::size_t>(2 * d), 0);
        for (int i = 0; i < nq; ++i) {
            const double ts = t - q.nodes[static_cast<std::size_t>(i)] * ht;
            const double wt = q.weights[static_cast<std::size_t>(i)];
            if (ts < 0.0) continue;
            std::fill(idx.begin(), idx.end(), 0);
            for (;;) {
                double w = wt;
                for (int a = 0; a < d; ++a) {
                    w *= q.weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
                    xs[a] = x[a] - q.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])] * hx;
                }
                for (int a = 0; a < d; ++a) {
                    const int j = idx[static_cast<std::size_t>(d + a)];
                    w *= q.weights[static_cast<std::size_t>(j)];
                    ys[a] = y[a] - q.nodes[static_cast<std::size_t>(j)] * hy;
                }
                acc += w * drift(ts, xs, ys);
                std::size_t a = 0;
                while (a < idx.size() && ++idx[a] == nq) idx[a++] = 0;
                if (a == idx.size()) break;
            }
        }
        return acc;
    };
    out.diffusion_kernel = [=](double t, const Vec& x, const Vec& y) {
        const int nq = static_cast<int>(q.nodes.size());
        Mat acc = Mat::Zero(d, d1);
        const Mat eye = rect_identity(d, d1);
        Vec xs(d), ys(d);
        std::vector<int> idx(static_cast<std::size_t>(2 * d), 0);
        for (int i = 0; i < nq; ++i) {
            const double ts = t - q.nodes[static_cast<std::size_t>(i)] * ht;
            const double wt = q.weights[static_cast<std::size_t>(i)];
            if (ts < 0.0) {
                acc += wt * eye; // diffusion extends as the identity
                continue;
            }
            std::fill(idx.begin(), idx.end(), 0);
            for (;;) {
                double w = wt;
                for (int a = 0; a < d; ++a) {
                    w *= q.weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
                    xs[a] = x[a] - q.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])] * hx;
                }
                for (int a = 0; a < d; ++a) {
                    const int j = idx[static_cast<std::size_t>(d + a)];
                    w *= q.weights[static_cast<std::size_t>(j)];
                    ys[a] = y[a] - q.nodes[static_cast<std::size_t>(j)] * hy;
                }
                acc += w * diffusion(ts, xs, ys);
                std::size_t a = 0;
                while (a < idx.size() && ++idx[a] == nq) idx[a++] = 0;
                if (a == idx.size()) break;
            }
        }
        return acc;
    };
    return out;
}

} // namespace mvsde

#include "mvsde/coeffs.hpp"

#include <cmath>
#include <cstring>

namespace mvsde {

std::string to_string(BuiltinTag tag) {
    switch (tag) {
        case BuiltinTag::constant: return "constant";
        case BuiltinTag::linear: return "linear";
        case BuiltinTag::mean_reverting: return "mean_reverting";
        case BuiltinTag::step_drift: return "step_drift";
        case BuiltinTag::bounded_measurable: return "bounded_measurable";
    }
    return "?";
}

Mat rect_identity(int d, int d1) {
    Mat m = Mat::Zero(d, d1);
    for (int i = 0; i < std::min(d, d1); ++i) m(i, i) = 1.0;
    return m;
}

StateDiffusion KernelCoefficients::state_diffusion() const {
    require(diffusion_y_free, "state_diffusion: diffusion depends on the measure variable");
    auto kernel = diffusion_kernel;
    return [kernel](double t, const Vec& x) { return kernel(t, x, x); };
}

namespace {

void check_dims(const KernelCoefficients& c, const Vec& x, const ParticleEnsemble& e) {
    require(e.count() >= 1, "mean_field: empty ensemble");
    require(x.size() == c.dim_state, "mean_field: state dimension mismatch");
    require(e.dim() == c.dim_state, "mean_field: ensemble dimension mismatch");
}

[[noreturn]] void throw_nonfinite(const char* what, long j) {
    throw NumericError(std::string("mean_field: non-finite ") + what + " at particle " +
                       std::to_string(j));
}

} // namespace

Vec mean_field_drift(const KernelCoefficients& coeffs, double t, const Vec& x,
                     const ParticleEnsemble& ensemble) {
    check_dims(coeffs, x, ensemble);
    const long n = ensemble.count();
    Vec acc = Vec::Zero(coeffs.dim_state);
    for (long j = 0; j < n; ++j) {
        Vec v = coeffs.drift_kernel(t, x, ensemble.states.row(j).transpose());
        require(v.size() == coeffs.dim_state, "mean_field: drift kernel output dimension");
        if (!v.allFinite()) throw_nonfinite("drift", j);
        acc += v;
    }
    return acc / static_cast<double>(n);
}

Mat mean_field_diffusion(const KernelCoefficients& coeffs, double t, const Vec& x,
                         const ParticleEnsemble& ensemble) {
    check_dims(coeffs, x, ensemble);
    const long n = ensemble.count();
    Mat acc = Mat::Zero(coeffs.dim_state, coeffs.dim_noise);
    for (long j = 0; j < n; ++j) {
        Mat m = coeffs.diffusion_kernel(t, x, ensemble.states.row(j).transpose());
        require(m.rows() == coeffs.dim_state && m.cols() == coeffs.dim_noise,
                "mean_field: diffusion kernel output dimension");
        if (!m.allFinite()) throw_nonfinite("diffusion", j);
        acc += m;
    }
    return acc / static_cast<double>(n);
}

MeanFieldSnapshot mean_field_snapshot(const KernelCoefficients& coeffs, double t,
                                      const ParticleEnsemble& ensemble) {
    MeanFieldSnapshot snap;
    snap.t = t;
    if (!coeffs.separable()) return snap;
    const long n = ensemble.count();
    const int d = coeffs.dim_state;
    const int d1 = coeffs.dim_noise;
    Vec dacc = Vec::Zero(d);
    Vec sacc = Vec::Zero(d * d1);
    Vec scratch_d(d), scratch_s(d * d1);
    Vec yv(d);
    for (long j = 0; j < n; ++j) {
        yv = ensemble.states.row(j).transpose();
        coeffs.drift_field_raw(t, yv.data(), scratch_d.data());
        coeffs.diffusion_field_raw(t, yv.data(), scratch_s.data());
        dacc += scratch_d;
        sacc += scratch_s;
    }
    dacc /= static_cast<double>(n);
    sacc /= static_cast<double>(n);
    snap.drift_field_mean = dacc;
    snap.diffusion_field_mean = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                                    sacc.data(), d, d1)
                                    .eval();
    snap.valid = true;
    return snap;
}

namespace {

double get_param(const std::map<std::string, double>& params, const std::string& key,
                 double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

// Assembles the public closures from raw separable parts.
void finish_separable(KernelCoefficients& c) {
    const int d = c.dim_state;
    const int d1 = c.dim_noise;
    auto ds = c.drift_state_raw;
    auto df = c.drift_field_raw;
    auto ss = c.diffusion_state_raw;
    auto sf = c.diffusion_field_raw;
    c.drift_kernel = [d, ds, df](double t, const Vec& x, const Vec& y) {
        Vec a(d), b(d);
        ds(t, x.data(), a.data());
        df(t, y.data(), b.data());
        return Vec(a + b);
    };
    c.diffusion_kernel = [d, d1, ss, sf](double t, const Vec& x, const Vec& y) {
        Vec a(d * d1), b(d * d1);
        ss(t, x.data(), a.data());
        sf(t, y.data(), b.data());
        Vec s = a + b;
        return Mat(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                  Eigen::RowMajor>>(s.data(), d, d1));
    };
}

RawVecFn zero_fn(int len) {
    return [len](double, const double*, double* out) {
        std::memset(out, 0, sizeof(double) * static_cast<std::size_t>(len));
    };
}

// s * I_rect as a raw row-major writer.
RawVecFn scaled_identity_fn(int d, int d1, double s) {
    return [d, d1, s](double, const double*, double* out) {
        std::memset(out, 0, sizeof(double) * static_cast<std::size_t>(d * d1));
        for (int i = 0; i < std::min(d, d1); ++i) out[i * d1 + i] = s;
    };
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace

KernelCoefficients make_builtin(const std::string& name,
                                const std::map<std::string, double>& params, int d, int d1) {
    require(d >= 1 && d1 >= d, "builtin: need d >= 1 and d1 >= d");
    KernelCoefficients c;
    c.dim_state = d;
    c.dim_noise = d1;
    c.time_independent = true;
    c.diffusion_y_free = true;

    if (name == "constant") {
        const double cv = get_param(params, "c", 0.0);
        const double s = get_param(params, "s", 1.0);
        c.builtin_tag = BuiltinTag::constant;
        c.drift_state_raw = [d, cv](double, const double*, double* out) {
            for (int i = 0; i < d; ++i) out[i] = cv;
        };
        c.drift_field_raw = zero_fn(d);
        c.diffusion_state_raw = scaled_identity_fn(d, d1, s);
        c.diffusion_field_raw = zero_fn(d * d1);
        c.growth_constant = std::sqrt(static_cast<double>(d)) * std::abs(cv) +
                            std::sqrt(static_cast<double>(std::min(d, d1))) * std::abs(s);
    } else if (name == "linear") {
        const double a = get_param(params, "a", -1.0);
        const double beta = get_param(params, "beta", 0.0);
        const double s = get_param(params, "s", 1.0);
        c.builtin_tag = BuiltinTag::linear;
        c.drift_state_raw = [d, a](double, const double* x, double* out) {
            for (int i = 0; i < d; ++i) out[i] = a * x[i];
        };
        c.drift_field_raw = [d, beta](double, const double* y, double* out) {
            for (int i = 0; i < d; ++i) out[i] = beta * y[i];
        };
        c.diffusion_state_raw = scaled_identity_fn(d, d1, s);
        c.diffusion_field_raw = zero_fn(d * d1);
        // |a x + beta y| grows in y as well; the declared constant bounds the
        // kernel only on |y| <= |x|-type boxes, so advertise the x-slope plus
        // the diffusion. Condition checks on boxes approve it when beta = 0.
        c.growth_constant = std::abs(a) + std::abs(beta) +
                            std::sqrt(static_cast<double>(std::min(d, d1))) * std::abs(s);
    } else if (name == "mean_reverting") {
        const double theta = get_param(params, "theta", 1.0);
        const double s = get_param(params, "s", 1.0);
        c.builtin_tag = BuiltinTag::mean_reverting;
        c.drift_state_raw = [d, theta](double, const double* x, double* out) {
            for (int i = 0; i < d; ++i) out[i] = -theta * x[i];
        };
        c.drift_field_raw = [d, theta](double, const double* y, double* out) {
            for (int i = 0; i < d; ++i) out[i] = theta * y[i];
        };
        c.diffusion_state_raw = scaled_identity_fn(d, d1, s);
        c.diffusion_field_raw = zero_fn(d * d1);
        c.growth_constant = 2.0 * std::abs(theta) +
                            std::sqrt(static_cast<double>(std::min(d, d1))) * std::abs(s);
    } else if (name == "step_drift") {
        const double amp = get_param(params, "amp", 1.0);
        const double s = get_param(params, "s", 1.0);
        c.builtin_tag = BuiltinTag::step_drift;
        c.drift_state_raw = [d, amp](double, const double* x, double* out) {
            for (int i = 0; i < d; ++i) out[i] = amp * sign(x[i]);
        };
        c.drift_field_raw = zero_fn(d);
        c.diffusion_state_raw = scaled_identity_fn(d, d1, s);
        c.diffusion_field_raw = zero_fn(d * d1);
        c.growth_constant = std::sqrt(static_cast<double>(d)) * std::abs(amp) +
                            std::sqrt(static_cast<double>(std::min(d, d1))) * std::abs(s);
    } else if (name == "bounded_measurable") {
        const double freq = get_param(params, "freq", 7.0);
        const double coupling = get_param(params, "coupling", 0.3);
        const double offset = get_param(params, "offset", 0.0);
        const double sb = get_param(params, "sigma_base", 1.0);
        const double sa = get_param(params, "sigma_amp", 0.2);
        require(sb - std::abs(sa) > 0.0, "bounded_measurable: sigma must stay positive");
        c.builtin_tag = BuiltinTag::bounded_measurable;
        c.drift_state_raw = [d, freq, offset](double, const double* x, double* out) {
            for (int i = 0; i < d; ++i) out[i] = sign(std::sin(freq * x[i])) + offset;
        };
        c.drift_field_raw = [d, coupling](double, const double* y, double* out) {
            for (int i = 0; i < d; ++i) out[i] = coupling * std::tanh(y[i]);
        };
        c.diffusion_state_raw = [d, d1, sb, sa](double, const double* x, double* out) {
            std::memset(out, 0, sizeof(double) * static_cast<std::size_t>(d * d1));
            const double s = sb + sa * std::sin(x[0]);
            for (int i = 0; i < std::min(d, d1); ++i) out[i * d1 + i] = s;
        };
        c.diffusion_field_raw = zero_fn(d * d1);
        c.growth_constant = std::sqrt(static_cast<double>(d)) * (1.0 + std::abs(coupling) + std::abs(offset)) +
                            std::sqrt(static_cast<double>(std::min(d, d1))) * (sb + std::abs(sa));
    } else {
        throw ConfigError("unknown builtin coefficient family: " + name);
    }

    finish_separable(c);
    return c;
}

std::vector<std::string> builtin_names() {
    return {"constant", "linear", "mean_reverting", "step_drift", "bounded_measurable"};
}

KernelCoefficients make_separable_kernel(int d, int d1, RawVecFn drift_state,
                                         RawVecFn drift_field, RawVecFn diffusion_state,
                                         RawVecFn diffusion_field, double growth_constant,
                                         bool diffusion_y_free, bool time_independent) {
    require(d >= 1 && d1 >= 1, "make_separable_kernel: positive dimensions required");
    KernelCoefficients c;
    c.dim_state = d;
    c.dim_noise = d1;
    c.drift_state_raw = std::move(drift_state);
    c.drift_field_raw = std::move(drift_field);
    c.diffusion_state_raw = std::move(diffusion_state);
    c.diffusion_field_raw = std::move(diffusion_field);
    c.growth_constant = growth_constant;
    c.diffusion_y_free = diffusion_y_free;
    c.time_independent = time_independent;
    finish_separable(c);
    return c;
}

KernelCoefficients with_drift_offset(const KernelCoefficients& base, const Vec& offset) {
    require(offset.size() == base.dim_state, "with_drift_offset: dimension mismatch");
    KernelCoefficients c = base;
    c.builtin_tag.reset();
    c.growth_constant = base.growth_constant + offset.norm();
    const int d = base.dim_state;
    if (base.separable()) {
        auto inner = base.drift_state_raw;
        Vec off = offset;
        c.drift_state_raw = [inner, off, d](double t, const double* x, double* out) {
            inner(t, x, out);
            for (int i = 0; i < d; ++i) out[i] += off[i];
        };
        finish_separable(c);
    } else {
        auto inner = base.drift_kernel;
        Vec off = offset;
        c.drift_kernel = [inner, off](double t, const Vec& x, const Vec& y) {
            return Vec(inner(t, x, y) + off);
        };
    }
    return c;
}

} // namespace mvsde

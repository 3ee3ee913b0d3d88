#include "mvsde/config.hpp"

#include <fstream>

namespace mvsde {

using nlohmann::json;

namespace {

Vec json_vec(const json& arr, const char* what) {
    if (!arr.is_array() || arr.empty()) throw ConfigError(std::string(what) + ": expected array");
    Vec v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<long>(i)] = arr[i].get<double>();
    return v;
}

Mat json_mat(const json& arr, const char* what) {
    if (!arr.is_array() || arr.empty() || !arr[0].is_array()) {
        throw ConfigError(std::string(what) + ": expected array of arrays");
    }
    const std::size_t rows = arr.size();
    const std::size_t cols = arr[0].size();
    Mat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (arr[i].size() != cols) throw ConfigError(std::string(what) + ": ragged matrix");
        for (std::size_t j = 0; j < cols; ++j) m(static_cast<long>(i), static_cast<long>(j)) = arr[i][j].get<double>();
    }
    return m;
}

} // namespace

std::vector<std::string> experiment_names() {
    return {"simulate",  "moments",     "mollify-converge", "sqrt-lift",  "girsanov",
            "uniqueness-probe", "contraction", "timechange",       "sup-moment"};
}

ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig c;
    c.raw = doc;
    if (!doc.contains("experiment")) throw ConfigError("config: missing field 'experiment'");
    c.experiment = doc.at("experiment").get<std::string>();
    const auto names = experiment_names();
    if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
        throw ConfigError("config: unknown experiment '" + c.experiment + "'");
    }
    if (!doc.contains("seed")) throw ConfigError("config: missing field 'seed' (no entropy defaults)");
    c.seed = doc.at("seed").get<std::uint64_t>();

    const bool simulates = c.experiment != "contraction" && c.experiment != "sup-moment";
    if (doc.contains("coefficients")) {
        const json& co = doc.at("coefficients");
        if (!co.contains("name")) throw ConfigError("config: coefficients.name missing");
        c.coeff_name = co.at("name").get<std::string>();
        if (co.contains("params")) {
            for (auto it = co.at("params").begin(); it != co.at("params").end(); ++it) {
                c.coeff_params[it.key()] = it.value().get<double>();
            }
        }
    } else if (simulates) {
        throw ConfigError("config: missing field 'coefficients' for experiment " + c.experiment);
    }

    c.d = doc.value("d", 1);
    c.d1 = doc.value("d1", c.d);
    if (c.d < 1 || c.d1 < c.d) throw ConfigError("config: need d >= 1 and d1 >= d");
    c.particles = doc.value("N", 1L);
    if (c.particles < 1) throw ConfigError("config: need N >= 1");
    c.steps = doc.value("steps", 0L);
    if (c.steps < 0) throw ConfigError("config: negative steps");
    c.dt = doc.value("dt", 0.0);
    c.horizon = doc.value("horizon", c.dt * static_cast<double>(c.steps));
    if (simulates && c.steps > 0) {
        if (c.dt <= 0.0) throw ConfigError("config: dt must be positive");
        const double err = std::abs(c.dt * static_cast<double>(c.steps) - c.horizon);
        if (err > 1e-12 * std::max(1.0, std::abs(c.horizon))) {
            throw ConfigError("config: dt*steps must equal horizon");
        }
    }

    if (doc.contains("stopping_radius") && !doc.at("stopping_radius").is_null()) {
        c.stopping_radius = doc.at("stopping_radius").get<double>();
        if (*c.stopping_radius <= 0.0) throw ConfigError("config: stopping_radius must be positive");
    }

    if (doc.contains("initial_law")) {
        const json& il = doc.at("initial_law");
        const std::string type = il.value("type", "point");
        if (type == "point") {
            c.initial = point_mass(json_vec(il.at("mean"), "initial_law.mean"));
        } else if (type == "gaussian") {
            c.initial = gaussian_law(json_vec(il.at("mean"), "initial_law.mean"),
                                     json_mat(il.at("cov"), "initial_law.cov"));
        } else {
            throw ConfigError("config: initial_law.type must be point or gaussian");
        }
        if (c.initial.mean.size() != c.d) {
            throw ConfigError("config: initial_law dimension mismatch with d");
        }
    } else if (simulates) {
        c.initial = point_mass(Vec::Zero(c.d));
    }

    c.record = doc.value("record_particles", 64L);
    c.output_dir = doc.value("output_dir", std::string("out"));
    c.workers = doc.value("workers", 1);
    if (c.workers < 1) throw ConfigError("config: workers must be >= 1");
    if (doc.contains("tolerances")) c.tolerances = doc.at("tolerances");

    // Experiment-specific block keyed by the experiment name with '-' -> '_'.
    std::string key = c.experiment;
    for (auto& ch : key) {
        if (ch == '-') ch = '_';
    }
    if (doc.contains(key)) c.extra = doc.at(key);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError("config: parse error in " + path + ": " + e.what());
    }
    return parse_config(doc);
}

KernelCoefficients ExperimentConfig::coefficients() const {
    return make_builtin(coeff_name, coeff_params, d, d1);
}

SimulationSpec ExperimentConfig::simulation_spec() const {
    SimulationSpec spec;
    spec.coeffs = coefficients();
    spec.particles = particles;
    spec.steps = steps;
    spec.dt = dt;
    spec.seed = seed;
    spec.initial = initial;
    spec.record = record;
    spec.stopping_radius = stopping_radius;
    spec.workers = workers;
    return spec;
}

std::string config_hash(const json& doc) {
    const std::string dump = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

nlohmann::json RunManifest::to_json() const {
    return json{{"config_hash", config_hash},
                {"version", version},
                {"wall_time_s", wall_time_s},
                {"report", report_path},
                {"csv", csv_paths},
                {"ok", ok}};
}

} // namespace mvsde

#pragma once

#include "mvsde/config.hpp"

#include <json.hpp>

namespace mvsde {

// Dispatches to the named experiment, writes report.json, any CSV outputs
// and manifest.json under config.output_dir, and returns the manifest.
// manifest.ok reflects the experiment's hard invariants.
RunManifest run(const ExperimentConfig& config);

// In-memory runners (no filesystem side effects); each returns a report with
// an "ok" flag and appends any CSV bodies to `csv_bodies` as (name, bytes).
using CsvBodies = std::vector<std::pair<std::string, std::string>>;

nlohmann::json run_simulate(const ExperimentConfig&, CsvBodies& csv_bodies);
nlohmann::json run_moments(const ExperimentConfig&, CsvBodies& csv_bodies);
nlohmann::json run_mollify_converge(const ExperimentConfig&, CsvBodies& csv_bodies);
nlohmann::json run_sqrt_lift(const ExperimentConfig&, CsvBodies& csv_bodies);
nlohmann::json run_girsanov(const ExperimentConfig&, CsvBodies& csv_bodies);
nlohmann::json run_uniqueness_probe(const ExperimentConfig&, CsvBodies& csv_bodies);
nlohmann::json run_contraction(const ExperimentConfig&, CsvBodies& csv_bodies);
nlohmann::json run_timechange(const ExperimentConfig&, CsvBodies& csv_bodies);
nlohmann::json run_sup_moment(const ExperimentConfig&, CsvBodies& csv_bodies);

nlohmann::json dispatch_experiment(const ExperimentConfig&, CsvBodies& csv_bodies);

} // namespace mvsde

#pragma once

// Configuration parsing, parameter sweeps, CSV/JSON serialization and the
// command-line front end.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mps/analytics.hpp"
#include "mps/tdse.hpp"

namespace mps::io {

struct FieldGrid {
    double x_min = 0.0;
    double x_max = 0.0;
    double x_step = 0.0;
    std::vector<double> t_samples;

    friend bool operator==(const FieldGrid&, const FieldGrid&) = default;
};

struct RunConfig {
    std::optional<double> dt;
    std::optional<double> t_final;
    int n_points = 8192;
    std::optional<double> x_min;  // simulation domain, distinct from field_grid
    std::optional<double> x_max;
    int snapshot_every = 0;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct PacketConfig {
    double x0 = 0.0;
    std::optional<double> k0;  // defaults to the scenario's k1
    double sigma_x = 10.0;

    friend bool operator==(const PacketConfig&, const PacketConfig&) = default;
};

struct ScenarioConfig {
    PhysicalContext physical;
    double k1 = 0.0;
    double a = 1.0;
    double theta = 0.0;
    StepKind kind = StepKind::FiniteStep;
    std::optional<FieldGrid> field_grid;
    std::optional<PacketConfig> packet;
    std::optional<RunConfig> run;

    StepScenario scenario() const { return {physical, k1, a, theta, kind}; }

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct ParseError : std::runtime_error {
    ParseError(int line, const std::string& field, const std::string& what);
    int line;
    std::string field;
};

/// Parses the flat `[section]` / `key = value` format (sections: physical,
/// incident, field_grid, packet, run). Defaults: hbar = m = 1, a = 1, theta = 0.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig parse_config_file(const std::string& path);

/// Inverse of parse_config: parse_config(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& config);

struct FieldSample {
    double x;
    double t;
    Region region;
    double density;
    double current;
    double R_or_T;  // R for region A rows, T for region B rows
};

struct ResultRecord {
    ScenarioConfig config;
    RegimeTag regime = RegimeTag::NoCollision;
    // NaN marks fields that do not apply (e.g. k3 for the infinite step).
    double k2 = 0.0;
    double k3_gamma = 0.0;
    double k3_beta = 0.0;
    double b_over_a = 0.0;
    double c_over_a = 0.0;
    double R_boundary = 0.0;
    double T_boundary = 0.0;
    double effective_height = 0.0;
    std::string skip_reason;  // non-empty when the point was not solvable
    std::vector<FieldSample> field;
    std::optional<tdse::ValidationReport> validation;
    std::vector<std::string> notes;
};

/// Closed-form record for one scenario; NoCollision yields a structured
/// record with skip_reason instead of an exception.
ResultRecord run_analytic(const ScenarioConfig& config);

struct SweepAxis {
    std::string parameter;  // k1 | v | V0 | a | theta | hbar | mass
    double min = 0.0;
    double max = 0.0;
    double step = 0.0;  // step > 0, or count > 0 (exactly one of them)
    int count = 0;

    std::vector<double> values() const;
};

enum class SweepMode { Analytic, Validate };

struct SweepSpec {
    ScenarioConfig base;
    std::vector<SweepAxis> axes;
    SweepMode mode = SweepMode::Analytic;
};

/// One record per grid point in row-major axis order; per-point failures are
/// recorded in skip_reason and never abort the sweep.
std::vector<ResultRecord> run_sweep(const SweepSpec& spec);

// --- serialization ---

/// CSV dialect: `#` metadata comment first, then headers; `.` decimal,
/// scientific notation with 17 significant digits.
void write_records_csv(std::ostream& out, const std::vector<ResultRecord>& records);
void write_field_csv(std::ostream& out, const ResultRecord& record);
void write_records_json(std::ostream& out, const std::vector<ResultRecord>& records);
void write_report_text(std::ostream& out, const tdse::ValidationReport& report);

std::string format_double(double value);  // %.16e, round-trip exact

/// Entry point behind the `mps` binary. Exit codes: 0 success, 1 physics
/// rejection (NoCollision), 2 usage or parse error, 3 validation failure.
int cli_main(int argc, char** argv);

}  // namespace mps::io

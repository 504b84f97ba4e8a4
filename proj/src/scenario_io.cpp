#include "mps/scenario_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mps::io {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& text, int line, const std::string& field) {
    try {
        size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing characters");
        if (!std::isfinite(v)) throw std::invalid_argument("not finite");
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, field, "expected a finite number, got '" + text + "'");
    }
}

int parse_int(const std::string& text, int line, const std::string& field) {
    const double v = parse_number(text, line, field);
    if (v != std::floor(v)) throw ParseError(line, field, "expected an integer");
    return static_cast<int>(v);
}

// "min:max:step"
void parse_range3(const std::string& text, int line, const std::string& field, double& lo,
                  double& hi, double& step) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(trim(item));
    if (parts.size() != 3) throw ParseError(line, field, "expected min:max:step");
    lo = parse_number(parts[0], line, field);
    hi = parse_number(parts[1], line, field);
    step = parse_number(parts[2], line, field);
}

std::vector<double> parse_list(const std::string& text, int line, const std::string& field) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(trim(item), line, field));
    if (out.empty()) throw ParseError(line, field, "expected a comma-separated list");
    return out;
}

}  // namespace

ParseError::ParseError(int line_, const std::string& field_, const std::string& what_)
    : std::runtime_error("line " + std::to_string(line_) + ", " + field_ + ": " + what_),
      line(line_),
      field(field_) {}

ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig cfg;
    bool have_k1 = false;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(line_no, line, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "physical" && section != "incident" && section != "field_grid" &&
                section != "packet" && section != "run")
                throw ParseError(line_no, section, "unknown section");
            if (section == "field_grid" && !cfg.field_grid) cfg.field_grid.emplace();
            if (section == "packet" && !cfg.packet) cfg.packet.emplace();
            if (section == "run" && !cfg.run) cfg.run.emplace();
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, line, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string field = section + "." + key;

        if (section == "physical") {
            if (key == "hbar") cfg.physical.hbar = parse_number(value, line_no, field);
            else if (key == "mass") cfg.physical.mass = parse_number(value, line_no, field);
            else if (key == "v") cfg.physical.v = parse_number(value, line_no, field);
            else if (key == "V0") cfg.physical.V0 = parse_number(value, line_no, field);
            else throw ParseError(line_no, field, "unknown key");
        } else if (section == "incident") {
            if (key == "k1") { cfg.k1 = parse_number(value, line_no, field); have_k1 = true; }
            else if (key == "a") cfg.a = parse_number(value, line_no, field);
            else if (key == "theta") cfg.theta = parse_number(value, line_no, field);
            else if (key == "kind") {
                if (value == "finite") cfg.kind = StepKind::FiniteStep;
                else if (value == "infinite") cfg.kind = StepKind::InfiniteStep;
                else throw ParseError(line_no, field, "kind must be finite or infinite");
            } else throw ParseError(line_no, field, "unknown key");
        } else if (section == "field_grid") {
            auto& fg = *cfg.field_grid;
            if (key == "x") {
                parse_range3(value, line_no, field, fg.x_min, fg.x_max, fg.x_step);
                if (!(fg.x_step > 0.0)) throw ParseError(line_no, field, "x step must be > 0");
                if (!(fg.x_min <= fg.x_max)) throw ParseError(line_no, field, "x range is empty");
            } else if (key == "t") fg.t_samples = parse_list(value, line_no, field);
            else throw ParseError(line_no, field, "unknown key");
        } else if (section == "packet") {
            auto& p = *cfg.packet;
            if (key == "x0") p.x0 = parse_number(value, line_no, field);
            else if (key == "k0") p.k0 = parse_number(value, line_no, field);
            else if (key == "sigma_x") {
                p.sigma_x = parse_number(value, line_no, field);
                if (!(p.sigma_x > 0.0)) throw ParseError(line_no, field, "sigma_x must be > 0");
            } else throw ParseError(line_no, field, "unknown key");
        } else if (section == "run") {
            auto& r = *cfg.run;
            if (key == "dt") r.dt = parse_number(value, line_no, field);
            else if (key == "t_final") r.t_final = parse_number(value, line_no, field);
            else if (key == "n_points") r.n_points = parse_int(value, line_no, field);
            else if (key == "snapshot_every") r.snapshot_every = parse_int(value, line_no, field);
            else if (key == "domain") {
                std::vector<std::string> parts;
                std::stringstream ss(value);
                std::string item;
                while (std::getline(ss, item, ':')) parts.push_back(trim(item));
                if (parts.size() != 2) throw ParseError(line_no, field, "expected min:max");
                r.x_min = parse_number(parts[0], line_no, field);
                r.x_max = parse_number(parts[1], line_no, field);
            } else throw ParseError(line_no, field, "unknown key");
        } else {
            throw ParseError(line_no, key, "key outside any section");
        }
    }

    if (!have_k1) throw ParseError(line_no, "incident.k1", "required key missing");
    if (!(cfg.physical.v >= 0.0)) throw ParseError(0, "physical.v", "v must be >= 0");
    if (!(cfg.physical.V0 >= 0.0)) throw ParseError(0, "physical.V0", "V0 must be >= 0");
    if (!(cfg.physical.hbar > 0.0)) throw ParseError(0, "physical.hbar", "hbar must be > 0");
    if (!(cfg.physical.mass > 0.0)) throw ParseError(0, "physical.mass", "mass must be > 0");
    if (!(cfg.k1 > 0.0)) throw ParseError(0, "incident.k1", "k1 must be > 0");
    if (!(cfg.a > 0.0)) throw ParseError(0, "incident.a", "a must be > 0");
    return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.16e", value);
    return buf;
}

std::string serialize_config(const ScenarioConfig& cfg) {
    std::ostringstream out;
    auto num = [](double v) { return format_double(v); };
    out << "[physical]\n"
        << "hbar = " << num(cfg.physical.hbar) << "\n"
        << "mass = " << num(cfg.physical.mass) << "\n"
        << "v = " << num(cfg.physical.v) << "\n"
        << "V0 = " << num(cfg.physical.V0) << "\n\n"
        << "[incident]\n"
        << "k1 = " << num(cfg.k1) << "\n"
        << "a = " << num(cfg.a) << "\n"
        << "theta = " << num(cfg.theta) << "\n"
        << "kind = " << to_string(cfg.kind) << "\n";
    if (cfg.field_grid) {
        const auto& fg = *cfg.field_grid;
        out << "\n[field_grid]\n"
            << "x = " << num(fg.x_min) << ":" << num(fg.x_max) << ":" << num(fg.x_step) << "\n";
        if (!fg.t_samples.empty()) {
            out << "t = ";
            for (size_t i = 0; i < fg.t_samples.size(); ++i)
                out << (i ? "," : "") << num(fg.t_samples[i]);
            out << "\n";
        }
    }
    if (cfg.packet) {
        const auto& p = *cfg.packet;
        out << "\n[packet]\n"
            << "x0 = " << num(p.x0) << "\n";
        if (p.k0) out << "k0 = " << num(*p.k0) << "\n";
        out << "sigma_x = " << num(p.sigma_x) << "\n";
    }
    if (cfg.run) {
        const auto& r = *cfg.run;
        out << "\n[run]\n";
        if (r.dt) out << "dt = " << num(*r.dt) << "\n";
        if (r.t_final) out << "t_final = " << num(*r.t_final) << "\n";
        out << "n_points = " << r.n_points << "\n";
        if (r.x_min && r.x_max) out << "domain = " << num(*r.x_min) << ":" << num(*r.x_max) << "\n";
        if (r.snapshot_every > 0) out << "snapshot_every = " << r.snapshot_every << "\n";
    }
    return out.str();
}

ResultRecord run_analytic(const ScenarioConfig& config) {
    ResultRecord rec;
    rec.config = config;
    rec.k2 = rec.k3_gamma = rec.k3_beta = rec.b_over_a = rec.c_over_a = kNaN;
    rec.R_boundary = rec.T_boundary = rec.effective_height = kNaN;

    const StepScenario scenario = config.scenario();
    const Regime regime = classify_regime(scenario);
    rec.regime = regime.tag;
    rec.effective_height = regime.effective_height;
    if (regime.tag == RegimeTag::NoCollision) {
        rec.skip_reason = "no collision: k1 <= m v / hbar";
        return rec;
    }

    const AnalyticSolution sol = solve(scenario);
    rec.k2 = sol.reflected.wavenumber.real();
    rec.notes = sol.notes;
    if (scenario.kind == StepKind::InfiniteStep) {
        rec.R_boundary = kInfiniteStepReflectivity;
        rec.T_boundary = 0.0;
    } else {
        rec.k3_gamma = sol.transmitted->wavenumber.real();
        rec.k3_beta = sol.transmitted->wavenumber.imag();
        rec.b_over_a = sol.ratios->b_over_a;
        rec.c_over_a = sol.ratios->c_over_a;
        rec.R_boundary = reflectivity(sol, 0.0, 0.0);
        rec.T_boundary = transmissivity(sol, 0.0, 0.0);
        if (std::abs(rec.R_boundary + rec.T_boundary - 1.0) > 1e-12)
            throw std::logic_error("boundary unitarity violated in result record");
    }

    if (config.field_grid) {
        const auto& fg = *config.field_grid;
        std::vector<double> ts = fg.t_samples;
        if (ts.empty()) ts.push_back(0.0);
        const int nx = static_cast<int>(std::floor((fg.x_max - fg.x_min) / fg.x_step + 1e-9)) + 1;
        for (double t : ts) {
            const double vt = scenario.context.v * t;
            for (int i = 0; i < nx; ++i) {
                const double x = fg.x_min + i * fg.x_step;
                FieldSample s;
                s.x = x;
                s.t = t;
                s.region = x <= vt ? Region::A : Region::B;
                s.density = density_field(sol, x, t);
                s.current = current_field(sol, x, t);
                if (scenario.kind == StepKind::InfiniteStep)
                    s.R_or_T = s.region == Region::A ? kInfiniteStepReflectivity : 0.0;
                else
                    s.R_or_T = s.region == Region::A ? reflectivity(sol, x, t)
                                                     : transmissivity(sol, x, t);
                rec.field.push_back(s);
            }
        }
    }
    return rec;
}

std::vector<double> SweepAxis::values() const {
    if ((step > 0.0) == (count > 0))
        throw std::invalid_argument("sweep axis needs exactly one of step or count");
    std::vector<double> out;
    if (count > 0) {
        if (count == 1) return {min};
        for (int i = 0; i < count; ++i)
            out.push_back(min + (max - min) * i / (count - 1));
    } else {
        const double span = (max - min) / step;
        if (span < -1e-9) throw std::invalid_argument("empty sweep axis");
        const int n = static_cast<int>(std::floor(span + 1e-9)) + 1;
        for (int i = 0; i < n; ++i) out.push_back(min + i * step);
    }
    if (out.empty()) throw std::invalid_argument("empty sweep axis");
    return out;
}

namespace {

void apply_parameter(ScenarioConfig& cfg, const std::string& name, double value) {
    std::string key = name;
    if (const auto dot = key.rfind('.'); dot != std::string::npos) key = key.substr(dot + 1);
    if (key == "k1") cfg.k1 = value;
    else if (key == "v") cfg.physical.v = value;
    else if (key == "V0") cfg.physical.V0 = value;
    else if (key == "a") cfg.a = value;
    else if (key == "theta") cfg.theta = value;
    else if (key == "hbar") cfg.physical.hbar = value;
    else if (key == "mass") cfg.physical.mass = value;
    else throw std::invalid_argument("unknown sweep parameter: " + name);
}

tdse::PacketSpec packet_from_config(const ScenarioConfig& cfg) {
    PacketConfig pc = cfg.packet.value_or(PacketConfig{});
    tdse::PacketSpec spec;
    spec.sigma_x = pc.sigma_x;
    spec.k0 = pc.k0.value_or(cfg.k1);
    spec.x0 = pc.x0 != 0.0 ? pc.x0 : -6.0 * pc.sigma_x;
    return spec;
}

tdse::RunParams run_params_from_config(const ScenarioConfig& cfg) {
    tdse::RunParams params;
    if (cfg.run) {
        params.n_points = cfg.run->n_points;
        params.dt = cfg.run->dt;
        params.t_final = cfg.run->t_final;
        params.x_min = cfg.run->x_min;
        params.x_max = cfg.run->x_max;
        params.snapshot_every = cfg.run->snapshot_every;
    }
    return params;
}

void sweep_recurse(const SweepSpec& spec, size_t axis,
                   const std::vector<std::vector<double>>& grids, ScenarioConfig& point,
                   std::vector<ResultRecord>& out) {
    if (axis == spec.axes.size()) {
        ResultRecord rec;
        try {
            rec = run_analytic(point);
            if (spec.mode == SweepMode::Validate && rec.skip_reason.empty()) {
                rec.validation = tdse::validate_scenario(point.scenario(),
                                                        packet_from_config(point),
                                                        run_params_from_config(point));
            }
        } catch (const std::exception& e) {
            rec.config = point;
            rec.skip_reason = e.what();
        }
        out.push_back(std::move(rec));
        return;
    }
    for (double value : grids[axis]) {
        apply_parameter(point, spec.axes[axis].parameter, value);
        sweep_recurse(spec, axis + 1, grids, point, out);
    }
}

}  // namespace

std::vector<ResultRecord> run_sweep(const SweepSpec& spec) {
    if (spec.axes.empty()) throw std::invalid_argument("sweep needs at least one axis");
    std::vector<std::vector<double>> grids;
    for (const auto& axis : spec.axes) grids.push_back(axis.values());
    std::vector<ResultRecord> out;
    ScenarioConfig point = spec.base;
    sweep_recurse(spec, 0, grids, point, out);
    return out;
}

namespace {

void csv_cell(std::ostream& out, double v) {
    if (!std::isnan(v)) out << format_double(v);
}

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<ResultRecord>& records) {
    out << "# moving potential step scattering records; values %.16e\n";
    out << "kind,regime,hbar,mass,v,V0,k1,a,theta,k2,k3_gamma,k3_beta,b_over_a,c_over_a,"
           "R_boundary,T_boundary,effective_height,validation_pass,skip_reason\n";
    for (const auto& r : records) {
        const auto& c = r.config;
        out << to_string(c.kind) << ',' << to_string(r.regime) << ',';
        csv_cell(out, c.physical.hbar); out << ',';
        csv_cell(out, c.physical.mass); out << ',';
        csv_cell(out, c.physical.v); out << ',';
        csv_cell(out, c.physical.V0); out << ',';
        csv_cell(out, c.k1); out << ',';
        csv_cell(out, c.a); out << ',';
        csv_cell(out, c.theta); out << ',';
        csv_cell(out, r.k2); out << ',';
        csv_cell(out, r.k3_gamma); out << ',';
        csv_cell(out, r.k3_beta); out << ',';
        csv_cell(out, r.b_over_a); out << ',';
        csv_cell(out, r.c_over_a); out << ',';
        csv_cell(out, r.R_boundary); out << ',';
        csv_cell(out, r.T_boundary); out << ',';
        csv_cell(out, r.effective_height); out << ',';
        if (r.validation) out << (r.validation->all_pass() ? "pass" : "fail");
        out << ',' << r.skip_reason << '\n';
    }
}

void write_field_csv(std::ostream& out, const ResultRecord& record) {
    out << "# field table: R emitted for region A rows, T for region B rows\n";
    out << "x,t,region,density,current,R_or_T\n";
    for (const auto& s : record.field) {
        out << format_double(s.x) << ',' << format_double(s.t) << ','
            << (s.region == Region::A ? 'A' : 'B') << ',' << format_double(s.density) << ','
            << format_double(s.current) << ',' << format_double(s.R_or_T) << '\n';
    }
}

namespace {

json to_json(const ResultRecord& r) {
    const auto& c = r.config;
    json j{
        {"scenario",
         {{"physical",
           {{"hbar", c.physical.hbar},
            {"mass", c.physical.mass},
            {"v", c.physical.v},
            {"V0", c.physical.V0}}},
          {"incident", {{"k1", c.k1}, {"a", c.a}, {"theta", c.theta}}},
          {"kind", to_string(c.kind)}}},
        {"regime", to_string(r.regime)},
        {"k2", r.k2},
        {"k3", {{"gamma", r.k3_gamma}, {"beta", r.k3_beta}}},
        {"b_over_a", r.b_over_a},
        {"c_over_a", r.c_over_a},
        {"R_boundary", r.R_boundary},
        {"T_boundary", r.T_boundary},
        {"effective_height", r.effective_height},
    };
    if (!r.skip_reason.empty()) j["skip_reason"] = r.skip_reason;
    if (!r.notes.empty()) j["notes"] = r.notes;
    if (!r.field.empty()) {
        json rows = json::array();
        for (const auto& s : r.field)
            rows.push_back({{"x", s.x},
                            {"t", s.t},
                            {"region", s.region == Region::A ? "A" : "B"},
                            {"density", s.density},
                            {"current", s.current},
                            {"R_or_T", s.R_or_T}});
        j["field"] = rows;
    }
    if (r.validation) {
        const auto& rep = *r.validation;
        json entries = json::array();
        for (const auto& e : rep.entries)
            entries.push_back({{"name", e.name},
                               {"predicted", e.predicted},
                               {"measured", e.measured},
                               {"tolerance", e.tolerance},
                               {"relative", e.relative},
                               {"pass", e.pass}});
        j["validation"] = {{"entries", entries},
                           {"packet_R", rep.packet_R},
                           {"packet_T", rep.packet_T},
                           {"norm_drift", rep.norm_drift},
                           {"all_pass", rep.all_pass()}};
    }
    return j;
}

}  // namespace

void write_records_json(std::ostream& out, const std::vector<ResultRecord>& records) {
    json arr = json::array();
    for (const auto& r : records) arr.push_back(to_json(r));
    out << arr.dump(2) << '\n';
}

void write_report_text(std::ostream& out, const tdse::ValidationReport& report) {
    out << "scenario: kind=" << to_string(report.scenario.kind) << " k1=" << report.scenario.k1
        << " v=" << report.scenario.context.v << " V0=" << report.scenario.context.V0 << "\n";
    out << "boundary flux ratios: R=" << report.R_boundary << " T=" << report.T_boundary
        << "  (lab-frame; may leave [0,1])\n";
    out << "packet-norm split: R=" << report.packet_R << " T=" << report.packet_T
        << "  ((b/a)^2 construction, not from the flux formulas)\n";
    for (const auto& e : report.entries) {
        out << (e.pass ? "  pass  " : "  FAIL  ") << e.name << ": predicted=" << e.predicted
            << " measured=" << e.measured << " tol=" << e.tolerance
            << (e.relative ? " (rel)" : " (abs)") << "\n";
    }
    out << (report.all_pass() ? "all checks passed" : "validation FAILED") << "\n";
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

namespace {

struct CommonFlags {
    ScenarioConfig cfg;
    std::string kind_name = "finite";
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    std::string x_range;
    std::string t_list;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--k1", f.cfg.k1, "incident wavenumber");
    cmd->add_option("--v", f.cfg.physical.v, "step velocity");
    cmd->add_option("--V0", f.cfg.physical.V0, "step height");
    cmd->add_option("--hbar", f.cfg.physical.hbar, "reduced Planck constant");
    cmd->add_option("--mass", f.cfg.physical.mass, "particle mass");
    cmd->add_option("--kind", f.kind_name, "finite|infinite")
        ->check(CLI::IsMember({"finite", "infinite"}));
    cmd->add_option("--a", f.cfg.a, "incident amplitude modulus");
    cmd->add_option("--theta", f.cfg.theta, "common phase");
    cmd->add_option("--config", f.config_path, "config file; overrides physics flags");
    cmd->add_option("--x-range", f.x_range, "field sample range min:max:step");
    cmd->add_option("--t", f.t_list, "field sample times, comma separated");
    cmd->add_option("--out", f.out_path, "output path (default stdout)");
    cmd->add_option("--format", f.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
}

// Resolves flags and an optional config file into one ScenarioConfig.
// The config file takes precedence over physics flags.
ScenarioConfig resolve_config(const CommonFlags& f) {
    ScenarioConfig cfg;
    if (!f.config_path.empty()) {
        cfg = parse_config_file(f.config_path);
    } else {
        cfg = f.cfg;
        cfg.kind = f.kind_name == "infinite" ? StepKind::InfiniteStep : StepKind::FiniteStep;
        if (!(cfg.k1 > 0.0)) throw ParseError(0, "k1", "required (positive) --k1 missing");
    }
    if (!f.x_range.empty()) {
        FieldGrid fg = cfg.field_grid.value_or(FieldGrid{});
        parse_range3(f.x_range, 0, "--x-range", fg.x_min, fg.x_max, fg.x_step);
        if (!(fg.x_step > 0.0)) throw ParseError(0, "--x-range", "step must be > 0");
        cfg.field_grid = fg;
    }
    if (!f.t_list.empty()) {
        if (!cfg.field_grid) throw ParseError(0, "--t", "needs --x-range (or a field_grid section)");
        cfg.field_grid->t_samples = parse_list(f.t_list, 0, "--t");
    }
    return cfg;
}

struct OutStream {
    explicit OutStream(const std::string& path) {
        if (!path.empty()) {
            file.open(path);
            if (!file) throw std::runtime_error("cannot open output file: " + path);
        }
    }
    std::ostream& get() { return file.is_open() ? file : std::cout; }
    std::ofstream file;
};

SweepAxis parse_axis(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("axis must be name=min:max:step or name=min:max:n<count>");
    SweepAxis axis;
    axis.parameter = trim(text.substr(0, eq));
    std::vector<std::string> parts;
    std::stringstream ss(text.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(trim(item));
    if (parts.size() != 3) throw std::invalid_argument("axis needs min:max:step");
    axis.min = std::stod(parts[0]);
    axis.max = std::stod(parts[1]);
    if (!parts[2].empty() && parts[2].front() == 'n')
        axis.count = std::stoi(parts[2].substr(1));
    else
        axis.step = std::stod(parts[2]);
    return axis;
}

int emit_analytic(const ResultRecord& rec, const CommonFlags& flags) {
    OutStream out(flags.out_path);
    if (flags.format == "json") {
        write_records_json(out.get(), {rec});
    } else {
        write_records_csv(out.get(), {rec});
        if (!rec.field.empty()) {
            out.get() << '\n';
            write_field_csv(out.get(), rec);
        }
    }
    if (!rec.skip_reason.empty()) {
        std::cerr << "rejected: " << rec.skip_reason << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"moving potential step: closed-form scattering and TDSE validation"};
    app.require_subcommand(1);

    CommonFlags analytic_flags, simulate_flags, validate_flags, sweep_flags;

    auto* analytic = app.add_subcommand("analytic", "closed-form record and field table");
    add_common(analytic, analytic_flags);

    struct SimFlags {
        double sigma_x = 10.0;
        double x0 = std::numeric_limits<double>::quiet_NaN();
        int n_points = 8192;
        double dt = 0.0;
        double t_final = 0.0;
        int snapshot_every = 0;
    } sim_extra, val_extra;

    auto add_sim = [](CLI::App* cmd, SimFlags& f) {
        cmd->add_option("--sigma-x", f.sigma_x, "packet spatial width");
        cmd->add_option("--x0", f.x0, "packet initial center (default -6 sigma_x)");
        cmd->add_option("--n-points", f.n_points, "grid points");
        cmd->add_option("--dt", f.dt, "time step (default from accuracy budget)");
        cmd->add_option("--t-final", f.t_final, "total simulated time (default auto)");
        cmd->add_option("--snapshot-every", f.snapshot_every, "steps between snapshots");
    };

    auto* simulate = app.add_subcommand("simulate", "propagate a wave packet, dump snapshots");
    add_common(simulate, simulate_flags);
    add_sim(simulate, sim_extra);

    auto* validate = app.add_subcommand("validate", "TDSE validation against the closed form");
    add_common(validate, validate_flags);
    add_sim(validate, val_extra);

    auto* sweep = app.add_subcommand("sweep", "parameter sweep of analytic records");
    add_common(sweep, sweep_flags);
    std::vector<std::string> axis_specs;
    std::string sweep_mode = "analytic";
    sweep->add_option("--axis", axis_specs, "axis as name=min:max:step or name=min:max:n<count>")
        ->required();
    sweep->add_option("--mode", sweep_mode, "analytic|validate")
        ->check(CLI::IsMember({"analytic", "validate"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (analytic->parsed()) {
            return emit_analytic(run_analytic(resolve_config(analytic_flags)), analytic_flags);
        }

        if (simulate->parsed() || validate->parsed()) {
            const bool is_validate = validate->parsed();
            const CommonFlags& flags = is_validate ? validate_flags : simulate_flags;
            const SimFlags& extra = is_validate ? val_extra : sim_extra;

            ScenarioConfig cfg = resolve_config(flags);
            tdse::PacketSpec packet;
            packet.sigma_x = extra.sigma_x;
            packet.k0 = cfg.k1;
            packet.x0 = std::isnan(extra.x0) ? -6.0 * extra.sigma_x : extra.x0;
            if (cfg.packet) packet = packet_from_config(cfg);

            tdse::RunParams params = run_params_from_config(cfg);
            if (extra.n_points != 8192 || !cfg.run) params.n_points = extra.n_points;
            if (extra.dt > 0.0) params.dt = extra.dt;
            if (extra.t_final > 0.0) params.t_final = extra.t_final;
            if (extra.snapshot_every > 0) params.snapshot_every = extra.snapshot_every;

            OutStream out(flags.out_path);
            const bool snapshots = !is_validate && params.snapshot_every > 0;
            if (snapshots) {
                out.get() << "# wave function snapshots every " << params.snapshot_every
                          << " steps\n";
                out.get() << "t,x,re_psi,im_psi,V\n";
                params.snapshot = [&out](const tdse::GridState& s,
                                         const std::vector<double>& V) {
                    for (int i = 0; i < s.grid.n_points; ++i) {
                        out.get() << format_double(s.t) << ',' << format_double(s.grid.x(i))
                                  << ',' << format_double(s.psi[i].real()) << ','
                                  << format_double(s.psi[i].imag()) << ','
                                  << format_double(V[i]) << '\n';
                    }
                };
            }

            const auto report = tdse::validate_scenario(cfg.scenario(), packet, params);
            write_report_text(snapshots ? std::cerr : out.get(), report);
            return is_validate && !report.all_pass() ? 3 : 0;
        }

        if (sweep->parsed()) {
            SweepSpec spec;
            spec.base = resolve_config(sweep_flags);
            spec.mode = sweep_mode == "validate" ? SweepMode::Validate : SweepMode::Analytic;
            for (const auto& text : axis_specs) spec.axes.push_back(parse_axis(text));
            const auto records = run_sweep(spec);
            OutStream out(sweep_flags.out_path);
            if (sweep_flags.format == "json")
                write_records_json(out.get(), records);
            else
                write_records_csv(out.get(), records);
            return 0;
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        // Contract rejections from the physics layer: NoCollision and friends.
        std::cerr << "rejected: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace mps::io

#include "heatpinn/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace heatpinn {

void OutputSettings::validate() const {
    if (grid_nx < 2 || grid_ny < 2) throw Error("output.grid_nx/grid_ny must be >= 2");
    if (profile_samples < 2) throw Error("output.profile_samples must be >= 2");
}

void SimulationConfig::validate() const {
    domain.validate();
    material.validate();
    source.validate();
    arch.validate();
    hyper.validate();
    schedule.validate();
    counts.validate();
    fem.validate();
    output.validate();
    if (!(out_scale != 0.0)) throw Error("network.out_scale must be nonzero");
    if (!std::isfinite(initial_temperature)) throw Error("run.initial_temperature must be finite");
}

TrainSetup SimulationConfig::train_setup() const {
    TrainSetup s;
    s.domain = domain;
    s.material = material;
    s.source = source;
    s.arch = arch;
    s.hyper = hyper;
    s.counts = counts;
    s.schedule = schedule;
    s.out_scale = out_scale;
    s.out_offset = out_offset;
    s.initial_temperature = initial_temperature;
    return s;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& section, const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size())
        throw Error("config: [" + section + "] " + key + ": not a number: '" + value + "'");
    return v;
}

int parse_int(const std::string& section, const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size())
        throw Error("config: [" + section + "] " + key + ": not an integer: '" + value + "'");
    return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& section, const std::string& key,
                        const std::string& value) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size())
        throw Error("config: [" + section + "] " + key + ": not an unsigned integer: '" + value +
                    "'");
    return v;
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw Error("config: [" + section + "] " + key + ": expected true/false: '" + value + "'");
}

BoundaryCondition parse_bc(const std::string& section, const std::string& key,
                           const std::string& value) {
    std::istringstream in(value);
    std::string kind;
    double v = 0.0;
    if (!(in >> kind >> v) || !(in >> std::ws).eof())
        throw Error("config: [" + section + "] " + key +
                    ": expected '<dirichlet|neumann> <value>': '" + value + "'");
    BoundaryCondition bc;
    if (kind == "dirichlet")
        bc.kind = BoundaryCondition::Kind::dirichlet;
    else if (kind == "neumann")
        bc.kind = BoundaryCondition::Kind::neumann;
    else
        throw Error("config: [" + section + "] " + key + ": unknown condition kind '" + kind +
                    "'");
    bc.value = v;
    return bc;
}

/// Parser state: which optional defaults are still pending.
struct ParseState {
    bool saw_material = false;
    bool saw_source_start = false;
    bool saw_ef_path = false;
};

void apply_key(SimulationConfig& c, ParseState& st, const std::string& section,
               const std::string& key, const std::string& value) {
    auto num = [&] { return parse_double(section, key, value); };
    auto integer = [&] { return parse_int(section, key, value); };
    auto boolean = [&] { return parse_bool(section, key, value); };

    if (section == "domain") {
        if (key == "length") c.domain.length = num();
        else if (key == "width") c.domain.width = num();
        else throw Error("config: unknown key [domain] " + key);
    } else if (section == "material") {
        st.saw_material = true;
        if (key == "k") c.material.k = num();
        else if (key == "rho") c.material.rho = num();
        else if (key == "c") c.material.c = num();
        else throw Error("config: unknown key [material] " + key);
    } else if (section == "source") {
        if (key == "q0") c.source.q0 = num();
        else if (key == "r0") c.source.r0 = num();
        else if (key == "velocity") c.source.velocity = num();
        else if (key == "start_x") { c.source.start_x = num(); st.saw_source_start = true; }
        else if (key == "start_y") { c.source.start_y = num(); st.saw_source_start = true; }
        else if (key == "dir_x") c.source.dir_x = num();
        else if (key == "dir_y") c.source.dir_y = num();
        else throw Error("config: unknown key [source] " + key);
    } else if (section == "bc") {
        if (key == "ad" || key == "ab" || key == "bc" || key == "cd")
            c.domain.bc_of(edge_from_name(key)) = parse_bc(section, key, value);
        else throw Error("config: unknown key [bc] " + key);
    } else if (section == "network") {
        if (key == "hidden_layers") c.arch.hidden_layers = integer();
        else if (key == "hidden_width") c.arch.hidden_width = integer();
        else if (key == "out_scale") c.out_scale = num();
        else if (key == "out_offset") c.out_offset = num();
        else throw Error("config: unknown key [network] " + key);
    } else if (section == "training") {
        if (key == "epochs_per_phase") c.hyper.epochs_per_phase = integer();
        else if (key == "learning_rate") c.hyper.learning_rate = num();
        else if (key == "lr_decay") c.hyper.lr_decay = num();
        else if (key == "lr_decay_interval") c.hyper.lr_decay_interval = integer();
        else if (key == "beta1") c.hyper.adam.beta1 = num();
        else if (key == "beta2") c.hyper.adam.beta2 = num();
        else if (key == "eps") c.hyper.adam.eps = num();
        else if (key == "lambda_ic") c.hyper.weights.ic = num();
        else if (key == "lambda_bc") c.hyper.weights.bc = num();
        else if (key == "lambda_r") c.hyper.weights.residual = num();
        else if (key == "resample_interval") c.hyper.resample_interval = integer();
        else if (key == "minibatch") c.hyper.minibatch = integer();
        else if (key == "warmup_epochs") c.hyper.warmup_epochs = integer();
        else if (key == "warmup_lr") c.hyper.warmup_lr = num();
        else if (key == "reset_adam_per_phase") c.hyper.reset_adam_per_phase = boolean();
        else if (key == "normalize_time_per_window") c.hyper.normalize_time_per_window = boolean();
        else throw Error("config: unknown key [training] " + key);
    } else if (section == "schedule") {
        if (key == "t_total") c.schedule.t_total = num();
        else if (key == "dt_window") c.schedule.dt_window = num();
        else throw Error("config: unknown key [schedule] " + key);
    } else if (section == "sampling") {
        if (key == "interior") c.counts.interior = integer();
        else if (key == "boundary_per_edge") c.counts.boundary_per_edge = integer();
        else if (key == "initial") c.counts.initial = integer();
        else throw Error("config: unknown key [sampling] " + key);
    } else if (section == "fem") {
        if (key == "h") c.fem.h = num();
        else if (key == "dt") c.fem.dt = num();
        else if (key == "cg_tol") c.fem.cg_tol = num();
        else if (key == "lumped_mass") c.fem.lumped_mass = boolean();
        else throw Error("config: unknown key [fem] " + key);
    } else if (section == "output") {
        if (key == "grid_nx") c.output.grid_nx = integer();
        else if (key == "grid_ny") c.output.grid_ny = integer();
        else if (key == "profile_samples") c.output.profile_samples = integer();
        else throw Error("config: unknown key [output] " + key);
    } else if (section == "run") {
        if (key == "seed") c.seed = parse_u64(section, key, value);
        else if (key == "initial_temperature") c.initial_temperature = num();
        else throw Error("config: unknown key [run] " + key);
    } else {
        throw Error("config: unknown section [" + section + "]");
    }
}

void finalize(SimulationConfig& c, const ParseState& st, const std::string& origin) {
    if (!st.saw_material) throw Error(origin + ": missing required [material] section");
    // Defaults that depend on the parsed domain.
    if (!st.saw_source_start) {
        c.source.start_x = 0.0;
        c.source.start_y = c.domain.width / 2.0;
    }
    if (!st.saw_ef_path)
        c.domain.ef_path = {0.0, c.domain.width / 2.0, c.domain.length, c.domain.width / 2.0};
    // Rebuild the window list from t_total/dt_window.
    c.schedule = WindowSchedule::make(c.schedule.t_total, c.schedule.dt_window);
    c.validate();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_bc(const BoundaryCondition& bc) {
    return (bc.kind == BoundaryCondition::Kind::dirichlet ? std::string("dirichlet ")
                                                          : std::string("neumann ")) +
           fmt(bc.value);
}

} // namespace

SimulationConfig parse_config_text(const std::string& text, const std::string& origin) {
    SimulationConfig cfg;
    ParseState st;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw Error(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw Error(origin + ":" + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(origin + ":" + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw Error(origin + ":" + std::to_string(lineno) + ": key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw Error(origin + ":" + std::to_string(lineno) + ": empty key");
        apply_key(cfg, st, section, key, value);
    }
    finalize(cfg, st, origin);
    return cfg;
}

SimulationConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.string());
}

void apply_override(SimulationConfig& cfg, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    const std::size_t dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw Error("override must look like section.key=value: '" + assignment + "'");
    const std::string section = trim(assignment.substr(0, dot));
    const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
    const std::string value = trim(assignment.substr(eq + 1));
    ParseState st;
    st.saw_material = true;    // overrides sit on top of a parsed config
    st.saw_source_start = true;
    st.saw_ef_path = true;
    apply_key(cfg, st, section, key, value);
    if (section == "schedule")
        cfg.schedule = WindowSchedule::make(cfg.schedule.t_total, cfg.schedule.dt_window);
    if (section == "domain") // the probe path is always the midline
        cfg.domain.ef_path = {0.0, cfg.domain.width / 2.0, cfg.domain.length,
                              cfg.domain.width / 2.0};
    cfg.validate();
}

std::string SimulationConfig::canonical_dump() const {
    std::ostringstream out;
    out << "[domain]\n";
    out << "length = " << fmt(domain.length) << "\n";
    out << "width = " << fmt(domain.width) << "\n";
    out << "[material]\n";
    out << "k = " << fmt(material.k) << "\n";
    out << "rho = " << fmt(material.rho) << "\n";
    out << "c = " << fmt(material.c) << "\n";
    out << "[source]\n";
    out << "q0 = " << fmt(source.q0) << "\n";
    out << "r0 = " << fmt(source.r0) << "\n";
    out << "velocity = " << fmt(source.velocity) << "\n";
    out << "start_x = " << fmt(source.start_x) << "\n";
    out << "start_y = " << fmt(source.start_y) << "\n";
    out << "dir_x = " << fmt(source.dir_x) << "\n";
    out << "dir_y = " << fmt(source.dir_y) << "\n";
    out << "[bc]\n";
    out << "ad = " << fmt_bc(domain.bc_of(EdgeId::AD)) << "\n";
    out << "ab = " << fmt_bc(domain.bc_of(EdgeId::AB)) << "\n";
    out << "bc = " << fmt_bc(domain.bc_of(EdgeId::BC)) << "\n";
    out << "cd = " << fmt_bc(domain.bc_of(EdgeId::CD)) << "\n";
    out << "[network]\n";
    out << "hidden_layers = " << arch.hidden_layers << "\n";
    out << "hidden_width = " << arch.hidden_width << "\n";
    out << "out_scale = " << fmt(out_scale) << "\n";
    out << "out_offset = " << fmt(out_offset) << "\n";
    out << "[training]\n";
    out << "epochs_per_phase = " << hyper.epochs_per_phase << "\n";
    out << "learning_rate = " << fmt(hyper.learning_rate) << "\n";
    out << "lr_decay = " << fmt(hyper.lr_decay) << "\n";
    out << "lr_decay_interval = " << hyper.lr_decay_interval << "\n";
    out << "beta1 = " << fmt(hyper.adam.beta1) << "\n";
    out << "beta2 = " << fmt(hyper.adam.beta2) << "\n";
    out << "eps = " << fmt(hyper.adam.eps) << "\n";
    out << "lambda_ic = " << fmt(hyper.weights.ic) << "\n";
    out << "lambda_bc = " << fmt(hyper.weights.bc) << "\n";
    out << "lambda_r = " << fmt(hyper.weights.residual) << "\n";
    out << "resample_interval = " << hyper.resample_interval << "\n";
    out << "minibatch = " << hyper.minibatch << "\n";
    out << "warmup_epochs = " << hyper.warmup_epochs << "\n";
    out << "warmup_lr = " << fmt(hyper.warmup_lr) << "\n";
    out << "reset_adam_per_phase = " << (hyper.reset_adam_per_phase ? "true" : "false") << "\n";
    out << "normalize_time_per_window = " << (hyper.normalize_time_per_window ? "true" : "false")
        << "\n";
    out << "[schedule]\n";
    out << "t_total = " << fmt(schedule.t_total) << "\n";
    out << "dt_window = " << fmt(schedule.dt_window) << "\n";
    out << "[sampling]\n";
    out << "interior = " << counts.interior << "\n";
    out << "boundary_per_edge = " << counts.boundary_per_edge << "\n";
    out << "initial = " << counts.initial << "\n";
    out << "[fem]\n";
    out << "h = " << fmt(fem.h) << "\n";
    out << "dt = " << fmt(fem.dt) << "\n";
    out << "cg_tol = " << fmt(fem.cg_tol) << "\n";
    out << "lumped_mass = " << (fem.lumped_mass ? "true" : "false") << "\n";
    out << "[output]\n";
    out << "grid_nx = " << output.grid_nx << "\n";
    out << "grid_ny = " << output.grid_ny << "\n";
    out << "profile_samples = " << output.profile_samples << "\n";
    out << "[run]\n";
    out << "seed = " << seed << "\n";
    out << "initial_temperature = " << fmt(initial_temperature) << "\n";
    return out.str();
}

std::string SimulationConfig::hash_hex() const {
    const std::uint64_t h = fnv1a(canonical_dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace heatpinn

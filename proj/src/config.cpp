#include "rim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rim/format.hpp"

namespace rim {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (...) {
        throw ConfigError("config: bad numeric value for '" + key + "': " + v);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (...) {
        throw ConfigError("config: bad integer value for '" + key + "': " + v);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: bad boolean value for '" + key + "': " + v);
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("config: empty list element for '" + key + "'");
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("config: empty list for '" + key + "'");
    return out;
}

std::string fmt_list(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += fmt_g(xs[i]);
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

#define FIELD_D(sect, name) \
    {#name, [](ExperimentConfig& c, const std::string& k, const std::string& v) { \
         c.sect.name = parse_double(k, v); }}
#define FIELD_U(sect, name) \
    {#name, [](ExperimentConfig& c, const std::string& k, const std::string& v) { \
         c.sect.name = parse_u64(k, v); }}
#define FIELD_B(sect, name) \
    {#name, [](ExperimentConfig& c, const std::string& k, const std::string& v) { \
         c.sect.name = parse_bool(k, v); }}
#define FIELD_S(sect, name) \
    {#name, [](ExperimentConfig& c, const std::string&, const std::string& v) { \
         c.sect.name = v; }}
#define FIELD_L(sect, name) \
    {#name, [](ExperimentConfig& c, const std::string& k, const std::string& v) { \
         c.sect.name = parse_list(k, v); }}

const std::map<std::string, std::map<std::string, Setter>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter>> s = {
        {"model",
         {FIELD_U(model, n_total), FIELD_D(model, alpha), FIELD_D(model, r_cut),
          FIELD_S(model, nonlinearity)}},
        {"dynamics",
         {FIELD_D(dynamics, nu), FIELD_D(dynamics, sigma), FIELD_D(dynamics, eta),
          FIELD_D(dynamics, delta), FIELD_D(dynamics, lambda)}},
        {"grids",
         {FIELD_D(grids, dt), FIELD_D(grids, window_T), FIELD_D(grids, tail_T)}},
        {"monte_carlo", {FIELD_U(monte_carlo, n_paths), FIELD_U(monte_carlo, master_seed)}},
        {"solver", {FIELD_D(solver, tol), FIELD_U(solver, max_iter)}},
        {"shape",
         {FIELD_L(shape, sigma_sweep), FIELD_D(shape, nu_over_sigma),
          FIELD_U(shape, xi_count), FIELD_D(shape, calibration_fraction),
          FIELD_D(shape, safety_factor), FIELD_D(shape, max_violation_fraction)}},
        {"attract",
         {FIELD_D(attract, t_end), FIELD_D(attract, sample_dt), FIELD_D(attract, xi0),
          FIELD_D(attract, pert_mode2), FIELD_D(attract, pert_mode3),
          FIELD_D(attract, min_observation), FIELD_D(attract, dist_floor),
          FIELD_D(attract, min_bound_fraction), FIELD_D(attract, min_rate_fraction)}},
        {"cone",
         {FIELD_D(cone, t_end), FIELD_D(cone, u0_scale), FIELD_D(cone, pert_scale),
          FIELD_D(cone, cone_tol)}},
        {"ktail", {FIELD_D(ktail, ks_threshold)}},
        {"amplitude",
         {FIELD_L(amplitude, epsilons), FIELD_D(amplitude, nu0), FIELD_D(amplitude, a0),
          FIELD_D(amplitude, tol_factor), FIELD_D(amplitude, min_fraction)}},
        {"simulate",
         {FIELD_L(simulate, u0), FIELD_D(simulate, t_end), FIELD_B(simulate, cutoff),
          FIELD_B(simulate, with_reduced), FIELD_S(simulate, reduced_mode),
          FIELD_B(simulate, with_amplitude), FIELD_D(simulate, dist_sample_dt)}},
    };
    return s;
}

#undef FIELD_D
#undef FIELD_U
#undef FIELD_B
#undef FIELD_S
#undef FIELD_L

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (schema().find(section) == schema().end())
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const auto& sect = schema().at(section);
        const auto it = sect.find(key);
        if (it == sect.end())
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" +
                              key + "' in section [" + section + "]");
        it->second(cfg, key, val);
    }
    // cross-field sanity that does not need the model
    if (cfg.model.nonlinearity != "burgers" && cfg.model.nonlinearity != "none")
        throw ConfigError("config: model.nonlinearity must be burgers or none");
    if (cfg.simulate.reduced_mode != "quadratic" && cfg.simulate.reduced_mode != "exact-lp")
        throw ConfigError("config: simulate.reduced_mode must be quadratic or exact-lp");
    if (cfg.grids.dt <= 0.0) throw ConfigError("config: grids.dt must be > 0");
    if (cfg.shape.nu_over_sigma < 0.0 || cfg.shape.nu_over_sigma >= 1.0)
        throw ConfigError("config: shape.nu_over_sigma must lie in [0, 1)");
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError("config: cannot open " + file);
    std::stringstream buf;
    buf << is.rdbuf();
    return parse(buf.str());
}

std::string ExperimentConfig::to_ini() const {
    std::ostringstream os;
    os << "[model]\n";
    os << "n_total = " << model.n_total << "\n";
    os << "alpha = " << fmt_g(model.alpha) << "\n";
    os << "r_cut = " << fmt_g(model.r_cut) << "\n";
    os << "nonlinearity = " << model.nonlinearity << "\n\n";
    os << "[dynamics]\n";
    os << "nu = " << fmt_g(dynamics.nu) << "\n";
    os << "sigma = " << fmt_g(dynamics.sigma) << "\n";
    os << "eta = " << fmt_g(dynamics.eta) << "\n";
    os << "delta = " << fmt_g(dynamics.delta) << "\n";
    os << "lambda = " << fmt_g(dynamics.lambda) << "\n\n";
    os << "[grids]\n";
    os << "dt = " << fmt_g(grids.dt) << "\n";
    os << "window_T = " << fmt_g(grids.window_T) << "\n";
    os << "tail_T = " << fmt_g(grids.tail_T) << "\n\n";
    os << "[monte_carlo]\n";
    os << "n_paths = " << monte_carlo.n_paths << "\n";
    os << "master_seed = " << monte_carlo.master_seed << "\n\n";
    os << "[solver]\n";
    os << "tol = " << fmt_g(solver.tol) << "\n";
    os << "max_iter = " << solver.max_iter << "\n\n";
    os << "[shape]\n";
    os << "sigma_sweep = " << fmt_list(shape.sigma_sweep) << "\n";
    os << "nu_over_sigma = " << fmt_g(shape.nu_over_sigma) << "\n";
    os << "xi_count = " << shape.xi_count << "\n";
    os << "calibration_fraction = " << fmt_g(shape.calibration_fraction) << "\n";
    os << "safety_factor = " << fmt_g(shape.safety_factor) << "\n";
    os << "max_violation_fraction = " << fmt_g(shape.max_violation_fraction) << "\n\n";
    os << "[attract]\n";
    os << "t_end = " << fmt_g(attract.t_end) << "\n";
    os << "sample_dt = " << fmt_g(attract.sample_dt) << "\n";
    os << "xi0 = " << fmt_g(attract.xi0) << "\n";
    os << "pert_mode2 = " << fmt_g(attract.pert_mode2) << "\n";
    os << "pert_mode3 = " << fmt_g(attract.pert_mode3) << "\n";
    os << "min_observation = " << fmt_g(attract.min_observation) << "\n";
    os << "dist_floor = " << fmt_g(attract.dist_floor) << "\n";
    os << "min_bound_fraction = " << fmt_g(attract.min_bound_fraction) << "\n";
    os << "min_rate_fraction = " << fmt_g(attract.min_rate_fraction) << "\n\n";
    os << "[cone]\n";
    os << "t_end = " << fmt_g(cone.t_end) << "\n";
    os << "u0_scale = " << fmt_g(cone.u0_scale) << "\n";
    os << "pert_scale = " << fmt_g(cone.pert_scale) << "\n";
    os << "cone_tol = " << fmt_g(cone.cone_tol) << "\n\n";
    os << "[ktail]\n";
    os << "ks_threshold = " << fmt_g(ktail.ks_threshold) << "\n\n";
    os << "[amplitude]\n";
    os << "epsilons = " << fmt_list(amplitude.epsilons) << "\n";
    os << "nu0 = " << fmt_g(amplitude.nu0) << "\n";
    os << "a0 = " << fmt_g(amplitude.a0) << "\n";
    os << "tol_factor = " << fmt_g(amplitude.tol_factor) << "\n";
    os << "min_fraction = " << fmt_g(amplitude.min_fraction) << "\n\n";
    os << "[simulate]\n";
    os << "u0 = " << fmt_list(simulate.u0) << "\n";
    os << "t_end = " << fmt_g(simulate.t_end) << "\n";
    os << "cutoff = " << (simulate.cutoff ? "true" : "false") << "\n";
    os << "with_reduced = " << (simulate.with_reduced ? "true" : "false") << "\n";
    os << "reduced_mode = " << simulate.reduced_mode << "\n";
    os << "with_amplitude = " << (simulate.with_amplitude ? "true" : "false") << "\n";
    os << "dist_sample_dt = " << fmt_g(simulate.dist_sample_dt) << "\n";
    return os.str();
}

std::string ExperimentConfig::content_hash() const {
    const std::string ini = to_ini();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : ini) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xF];
        h >>= 4;
    }
    buf[16] = 0;
    return std::string(buf);
}

}  // namespace rim

#ifndef SCL_CONFIG_HPP
#define SCL_CONFIG_HPP

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scl/emulator.hpp"

namespace scl {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// key=value configuration with # comments; later assignments win, so
/// command-line overrides are plain re-assignments.
class Config {
public:
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::string line;
        while (std::getline(in, line)) {
            parse_line(line);
        }
    }

    void parse_line(const std::string& raw) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') return;
        const auto pos = line.find('=');
        if (pos == std::string::npos) throw ConfigError("config line without '=': " + raw);
        values_[trim(line.substr(0, pos))] = trim(line.substr(pos + 1));
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& def) const {
        auto it = values_.find(key);
        return it != values_.end() ? it->second : def;
    }

    double get_double(const std::string& key, double def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        try {
            return std::stod(it->second);
        } catch (...) {
            throw ConfigError("config key '" + key + "' is not a number: " + it->second);
        }
    }

    long long get_int(const std::string& key, long long def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        try {
            return std::stoll(it->second);
        } catch (...) {
            throw ConfigError("config key '" + key + "' is not an integer: " + it->second);
        }
    }

    std::vector<double> get_list(const std::string& key, std::vector<double> def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        std::vector<double> out;
        std::istringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!trim(tok).empty()) out.push_back(std::stod(trim(tok)));
        }
        return out;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Resolved configuration echo, one sorted key=value per line.
    std::string echo() const {
        std::ostringstream os;
        for (const auto& [k, v] : values_) os << k << "=" << v << "\n";
        return os.str();
    }

private:
    static std::string trim(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    std::map<std::string, std::string> values_;
};

/// Named closed-form fluxes available from config files.
inline emu::FluxSpec make_flux(const std::string& name) {
    emu::FluxSpec flux;
    if (name == "burgers") {
        flux.f = [](double u) { return 0.5 * u * u; };
        flux.df = [](double u) { return u; };
        flux.f2sup = 1.0;
    } else if (name == "advection") {
        flux.f = [](double u) { return u; };
        flux.df = [](double) { return 1.0; };
        flux.f1sup = 1.0;
        flux.f2sup = 0.0;
    } else if (name == "zero") {
        flux.f = [](double) { return 0.0; };
        flux.df = [](double) { return 0.0; };
        flux.f1sup = 0.0;
        flux.f2sup = 0.0;
    } else {
        throw ConfigError("unknown flux: " + name + " (burgers|advection|zero)");
    }
    return flux;
}

/// Named initial-data families. kl_sine is the sine expansion
/// 1 + sum_k y_k 2^{1-k} sin(k x) truncated at init_d terms.
inline emu::InitSpec make_init(const std::string& name, int d) {
    emu::InitSpec init;
    init.kind = emu::InitKind::kl_init;
    if (name == "kl_sine") {
        init.mean = [](double) { return 1.0; };
        for (int k = 1; k <= d; ++k) {
            init.modes.push_back(
                {std::pow(4.0, 1.0 - k), [k](double x) { return std::sin(k * x); }});
        }
    } else if (name == "one_plus_sin") {
        init.mean = [](double x) { return 1.0 + std::sin(x); };
    } else if (name == "constant") {
        init.mean = [](double) { return 1.0; };
    } else {
        throw ConfigError("unknown init: " + name + " (kl_sine|one_plus_sin|constant)");
    }
    return init;
}

/// Emulator configuration from config keys (fixed closed-form flux).
inline emu::EmulatorConfig emulator_config_from(const Config& c) {
    emu::EmulatorConfig cfg;
    cfg.a = c.get_double("domain_a", 0.0);
    cfg.b = c.get_double("domain_b", 1.0);
    cfg.T = c.get_double("T", 0.1);
    cfg.N = static_cast<int>(c.get_int("N", 16));
    cfg.flux = make_flux(c.get_string("flux", "burgers"));
    cfg.init = make_init(c.get_string("init", "kl_sine"), static_cast<int>(c.get_int("init_d", 3)));
    cfg.C0 = c.get_double("C0", 3.0);
    const std::string bc = c.get_string("boundary", "periodic");
    if (bc == "periodic") {
        cfg.boundary = Boundary::periodic;
    } else if (bc == "outflow") {
        cfg.boundary = Boundary::outflow;
    } else {
        throw ConfigError("unknown boundary: " + bc);
    }
    if (c.has("K")) cfg.K_override = static_cast<int>(c.get_int("K", 0));
    if (c.has("J")) cfg.J_override = static_cast<int>(c.get_int("J", 0));
    if (c.has("F")) cfg.F_override = c.get_double("F", 0.0);
    const std::string sm = c.get_string("store_mode", "unrolled");
    if (sm == "unrolled") {
        cfg.store_mode = emu::StoreMode::unrolled;
    } else if (sm == "shared_block") {
        cfg.store_mode = emu::StoreMode::shared_block;
    } else {
        throw ConfigError("unknown store_mode: " + sm);
    }
    return cfg;
}

} // namespace scl

#endif // SCL_CONFIG_HPP

#include "minkgs/cli.hpp"

#include "minkgs/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace minkgs::cli {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

bool parse_number(const std::string& text, double& value) {
    std::istringstream is(text);
    is.imbue(std::locale::classic());
    is >> value;
    if (is.fail()) return false;
    is >> std::ws;
    return is.eof();
}

}  // namespace

void RunConfig::validate() const {
    require(N >= 2, "--N must be at least 2");
    require(!family.empty(), "--family is required (power, sine or table)");
    require(!scan_max || (*scan_max > 0.0 && std::isfinite(*scan_max)), "--scan-max must be positive");
    require(points >= 1, "--points must be at least 1");
    if (xi_min && xi_max) require(*xi_min < *xi_max, "--xi-min must be below --xi-max");
    try {
        shooting.validate();
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    }
}

Nonlinearity read_table(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open table " + path);
    std::vector<double> s;
    std::vector<double> f;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        require(comma != std::string::npos, path + ":" + std::to_string(lineno) + ": expected s,f");
        double a = 0.0;
        double b = 0.0;
        const bool ok = parse_number(line.substr(0, comma), a) && parse_number(line.substr(comma + 1), b);
        if (!ok && s.empty() && lineno == 1) continue;  // header
        require(ok, path + ":" + std::to_string(lineno) + ": not a number pair");
        s.push_back(a);
        f.push_back(b);
    }
    try {
        return Nonlinearity::tabulated(std::move(s), std::move(f));
    } catch (const PreconditionError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

Nonlinearity build_nonlinearity(const RunConfig& cfg) {
    Nonlinearity nl = [&] {
        if (cfg.family == "power") {
            require(cfg.lambda.has_value(), "family power needs --lambda");
            require(cfg.q.has_value(), "family power needs --q");
            require(*cfg.lambda > 0.0, "--lambda must be positive");
            require(*cfg.q > 1.0, "--q must exceed 1 for family power");
            return Nonlinearity::power(*cfg.lambda, *cfg.q);
        }
        if (cfg.family == "sine") {
            require(cfg.q.has_value(), "family sine needs --q");
            require(*cfg.q >= 1.0, "--q must be at least 1 for family sine");
            return Nonlinearity::sine(*cfg.q);
        }
        if (cfg.family == "table") {
            require(!cfg.table_path.empty(), "family table needs --table");
            return read_table(cfg.table_path);
        }
        throw ConfigError("unknown family '" + cfg.family + "' (power, sine or table)");
    }();
    if (cfg.scan_max) {
        require(*cfg.scan_max <= nl.domain_max(), "--scan-max exceeds the table's last abscissa");
        nl.set_scan_max(*cfg.scan_max);
    }
    return nl;
}

}  // namespace minkgs::cli

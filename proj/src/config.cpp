#include "metastable/config.hpp"

#include <fstream>
#include <sstream>

#include "metastable/errors.hpp"

namespace metastable {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t cpos = line.find_first_of("#;");
        if (cpos != std::string::npos) line = line.substr(0, cpos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            cfg.sections_[section];
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.sections_[section][key] = value;
    }
    return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end() || !it->second.count(key))
        throw ConfigError(origin_ + ": missing required key [" + section + "] " + key);
    return it->second.at(key);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    return has(section, key) ? sections_.at(section).at(key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    const std::string v = get_string(section, key);
    try {
        size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": [" + section + "] " + key + " = '" + v + "' is not a number");
    }
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

long Config::get_int(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    double d = get_double(section, key);
    long l = static_cast<long>(d);
    if (static_cast<double>(l) != d)
        throw ConfigError(origin_ + ": [" + section + "] " + key + " must be an integer");
    return l;
}

std::vector<double> Config::get_double_list(const std::string& section, const std::string& key) const {
    const std::string v = get_string(section, key);
    std::istringstream in(v);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": [" + section + "] " + key + ": bad list element '" + tok + "'");
        }
    }
    if (out.empty()) throw ConfigError(origin_ + ": [" + section + "] " + key + " is an empty list");
    return out;
}

std::vector<double> Config::get_double_list(const std::string& section, const std::string& key,
                                            const std::vector<double>& fallback) const {
    return has(section, key) ? get_double_list(section, key) : fallback;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    sections_[section][key] = value;
}

std::string Config::canonical_text() const {
    std::ostringstream out;
    for (const auto& [sec, kv] : sections_) {
        out << '[' << sec << "]\n";
        for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
    }
    return out.str();
}

}  // namespace metastable

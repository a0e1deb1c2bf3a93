#include "mforge/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace mforge {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Drop a trailing comment; a # inside double quotes is literal.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& s, int lineno) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        return s.substr(1, s.size() - 2);
    if (!s.empty() && (s.front() == '"' || s.back() == '"'))
        throw ConfigError("unbalanced quotes on line " + std::to_string(lineno));
    return s;
}

double parse_number(const std::string& s, int lineno) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size())
            throw ConfigError("trailing characters after number '" + s +
                              "' on line " + std::to_string(lineno));
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + s + "' on line " +
                          std::to_string(lineno));
    }
}

Interval parse_interval(const std::string& s, int lineno) {
    std::string t = trim(s);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']')
        throw ConfigError("expected an interval [lo, hi] on line " +
                          std::to_string(lineno));
    std::string inner = t.substr(1, t.size() - 2);
    std::size_t comma = inner.find(',');
    if (comma == std::string::npos)
        throw ConfigError("interval needs two comma-separated bounds on line " +
                          std::to_string(lineno));
    double lo = parse_number(trim(inner.substr(0, comma)), lineno);
    double hi = parse_number(trim(inner.substr(comma + 1)), lineno);
    if (!(lo <= hi))
        throw ConfigError("interval bounds out of order on line " +
                          std::to_string(lineno));
    return Interval(lo, hi);
}

}  // namespace

bool Config::has_interval(const std::string& var) const {
    for (const auto& [n, iv] : intervals)
        if (n == var) return true;
    return false;
}

Domain Config::domain() const {
    Domain d;
    for (const auto& [n, iv] : intervals) d.with(n, iv.lo, iv.hi);
    return d;
}

Config parse_config_text(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            if (section != "system" && section != "params" &&
                section != "domain" && section != "task")
                throw ConfigError("unknown section [" + section +
                                  "] on line " + std::to_string(lineno));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value' on line " +
                              std::to_string(lineno));
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("empty key or value on line " +
                              std::to_string(lineno));
        if (section.empty())
            throw ConfigError("key '" + key + "' outside any section on line " +
                              std::to_string(lineno));

        if (section == "system") {
            std::string v = unquote(value, lineno);
            if (key == "name") cfg.name = v;
            else if (key == "force") cfg.force = v;
            else if (key == "mu") cfg.mu = v;
            else if (key == "mu1") cfg.mu1 = v;
            else if (key == "mu2") cfg.mu2 = v;
            else if (key == "integral") cfg.integral = v;
            else if (key == "h") cfg.h = v;
            else if (key == "g") cfg.g = v;
            else
                throw ConfigError("unknown [system] key '" + key +
                                  "' on line " + std::to_string(lineno));
        } else if (section == "params") {
            cfg.params[key] = parse_number(value, lineno);
        } else if (section == "domain") {
            Interval iv = parse_interval(value, lineno);
            bool replaced = false;
            for (auto& [n, old] : cfg.intervals)
                if (n == key) {
                    old = iv;
                    replaced = true;
                }
            if (!replaced) cfg.intervals.emplace_back(key, iv);
        } else {  // task
            cfg.task[key] = unquote(value, lineno);
        }
    }
    return cfg;
}

Config parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace mforge

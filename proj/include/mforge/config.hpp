#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mforge/field.hpp"

namespace mforge {

// INI-style run configuration: `key = value` lines under [system], [params],
// [domain], and [task] headers. `#` starts a comment (outside quotes).
// Expression values may be double-quoted; intervals are written [lo, hi].
struct Config {
    // [system]
    std::string name;
    std::optional<std::string> force;
    std::optional<std::string> mu, mu1, mu2;
    std::optional<std::string> integral;
    std::optional<std::string> h, g;

    // [params]
    Params params;

    // [domain], in file order
    std::vector<std::pair<std::string, Interval>> intervals;

    // [task]: free-form keys consumed by the command (x0, step, t_end,
    // method, csv, quantity, v0, tag, samples, tol, seed, ...)
    std::map<std::string, std::string> task;

    bool has_interval(const std::string& var) const;
    Domain domain() const;  // empty when no [domain] entries
};

Config parse_config_text(const std::string& text);
Config parse_config_file(const std::string& path);

}  // namespace mforge

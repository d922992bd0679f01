#include "csmakit/run_config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

namespace csmakit {

namespace {

constexpr std::array<const char*, 9> kModes = {
    "simulate",  "analyze-zero", "analyze-delay", "bianchi",  "meanfield",
    "fairness",  "sweep-slot",   "sweep-minbe",   "compare"};

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    auto end = s.find_last_not_of(" \t\r\n");
    return begin == std::string::npos ? std::string{} : s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, sep)) {
        parts.push_back(trim(part));
    }
    return parts;
}

long long parse_int(const std::string& key, const std::string& value) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("invalid integer for '" + key + "': " + value);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    if (value == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    try {
        std::size_t pos = 0;
        double out = std::stod(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument(value);
        }
        return out;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for '" + key + "': " + value);
    }
}

// "2", "2,3,5" or "2..10"
std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    auto range = value.find("..");
    if (range != std::string::npos) {
        int lo = static_cast<int>(parse_int(key, value.substr(0, range)));
        int hi = static_cast<int>(parse_int(key, value.substr(range + 2)));
        if (hi < lo) {
            throw ConfigError("empty range for '" + key + "': " + value);
        }
        for (int v = lo; v <= hi; ++v) {
            out.push_back(v);
        }
        return out;
    }
    for (const std::string& part : split(value, ',')) {
        out.push_back(static_cast<int>(parse_int(key, part)));
    }
    if (out.empty()) {
        throw ConfigError("empty list for '" + key + "'");
    }
    return out;
}

// "K:7;b:1,3,9,..." (means) or "K:6;w:32,64,..." (windows)
BackoffSchedule parse_schedule(const std::string& value) {
    int retry = -1;
    std::vector<double> means;
    std::vector<int> windows;
    for (const std::string& field : split(value, ';')) {
        auto colon = field.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("schedule field needs key:value, got '" + field + "'");
        }
        const std::string key = trim(field.substr(0, colon));
        const std::string rest = trim(field.substr(colon + 1));
        if (key == "K") {
            retry = static_cast<int>(parse_int("schedule K", rest));
        } else if (key == "b") {
            for (const std::string& part : split(rest, ',')) {
                means.push_back(parse_double("schedule b", part));
            }
        } else if (key == "w") {
            for (const std::string& part : split(rest, ',')) {
                windows.push_back(static_cast<int>(parse_int("schedule w", part)));
            }
        } else {
            throw ConfigError("unknown schedule field '" + key + "'");
        }
    }
    if (retry < 0) {
        throw ConfigError("schedule needs a K: field");
    }
    try {
        BackoffSchedule schedule = windows.empty() ? BackoffSchedule::from_mean_backoffs(means)
                                                   : BackoffSchedule(windows);
        if (schedule.retry_limit() != retry) {
            throw ConfigError("schedule lists " + std::to_string(schedule.stage_count()) +
                              " stages but K=" + std::to_string(retry));
        }
        return schedule;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid schedule: ") + e.what());
    }
}

struct Assignments {
    std::vector<std::pair<std::string, std::string>> items;

    void add_line(const std::string& line) {
        const std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) {
            return;
        }
        auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected key=value, got '" + stripped + "'");
        }
        items.emplace_back(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
};

}  // namespace

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
    Assignments assignments;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        assignments.add_line(line);
    }
    for (const std::string& item : overrides) {
        assignments.add_line(item);
    }

    RunConfig config;
    bool explicit_schedule = false;
    bool generator_touched = false;
    for (const auto& [key, value] : assignments.items) {
        if (key == "mode") {
            config.mode = value;
        } else if (key == "schedule") {
            config.schedule = parse_schedule(value);
            explicit_schedule = true;
        } else if (key == "minbe") {
            config.gen_minbe = static_cast<int>(parse_int(key, value));
            generator_touched = true;
        } else if (key == "p") {
            config.gen_multiplier = static_cast<int>(parse_int(key, value));
            generator_touched = true;
        } else if (key == "maxbe") {
            config.gen_maxbe = static_cast<int>(parse_int(key, value));
            generator_touched = true;
        } else if (key == "K") {
            config.gen_retry = static_cast<int>(parse_int(key, value));
            generator_touched = true;
        } else if (key == "n") {
            config.n_list = parse_int_list(key, value);
        } else if (key == "delta_us") {
            config.delta_list = parse_int_list(key, value);
        } else if (key == "delta_r_us") {
            config.timing.rx_prop_delay_us = static_cast<double>(parse_int(key, value));
            config.delta_r_given = true;
        } else if (key == "sigma_us") {
            config.timing.slot_us = static_cast<double>(parse_int(key, value));
        } else if (key == "t_d_us") {
            config.timing.data_us = static_cast<double>(parse_int(key, value));
        } else if (key == "t_o_us") {
            config.timing.turnaround_us = static_cast<double>(parse_int(key, value));
        } else if (key == "ack_us") {
            config.timing.ack_us = static_cast<double>(parse_int(key, value));
        } else if (key == "phy_hdr_us") {
            config.timing.phy_header_us = static_cast<double>(parse_int(key, value));
        } else if (key == "sifs_us") {
            config.timing.sifs_us = static_cast<double>(parse_int(key, value));
        } else if (key == "difs_us") {
            config.timing.difs_us = static_cast<double>(parse_int(key, value));
        } else if (key == "eifs_us") {
            config.timing.eifs_us = static_cast<double>(parse_int(key, value));
        } else if (key == "cycles") {
            config.cycles = parse_int(key, value);
        } else if (key == "seed") {
            config.seed = static_cast<std::uint64_t>(parse_int(key, value));
        } else if (key == "window") {
            config.window = static_cast<int>(parse_int(key, value));
        } else if (key == "L") {
            config.frame_lengths = parse_int_list(key, value);
        } else if (key == "eu1_max") {
            config.run_length_max = parse_double(key, value);
        } else if (key == "minbe_range") {
            std::vector<int> range = parse_int_list(key, value);
            config.minbe_lo = range.front();
            config.minbe_hi = range.back();
        } else if (key == "m_max") {
            config.m_max = static_cast<int>(parse_int(key, value));
        } else if (key == "t_end") {
            config.t_end = parse_double(key, value);
        } else if (key == "out") {
            config.out_dir = value;
        } else if (key == "label") {
            config.label = value;
        } else if (key == "trace") {
            config.trace = parse_int(key, value) != 0;
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    if (!explicit_schedule && generator_touched) {
        try {
            config.schedule = BackoffSchedule::exponential(config.gen_minbe,
                                                           config.gen_multiplier,
                                                           config.gen_maxbe, config.gen_retry);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid schedule parameters: ") + e.what());
        }
    }
    if (!config.delta_list.empty()) {
        config.timing.prop_delay_us = static_cast<double>(config.delta_list.front());
        if (!config.delta_r_given) {
            config.timing.rx_prop_delay_us = config.timing.prop_delay_us;
        }
    }
    validate_config(config);
    return config;
}

void validate_config(const RunConfig& config) {
    if (config.mode.empty()) {
        throw ConfigError("missing required key 'mode'");
    }
    if (std::find(kModes.begin(), kModes.end(), config.mode) == kModes.end()) {
        throw ConfigError("unknown mode '" + config.mode + "'");
    }
    if (config.cycles < 1) {
        throw ConfigError("cycles must be >= 1");
    }
    if (config.window < 0) {
        throw ConfigError("window must be >= 0");
    }
    if (config.n_list.empty()) {
        throw ConfigError("n must not be empty");
    }
    for (int n : config.n_list) {
        if (n < 1 || n > 64) {
            throw ConfigError("n must lie in 1..64");
        }
    }
    try {
        config.timing.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const bool has_delay = config.timing.prop_delay_us > 0.0 || !config.delta_list.empty();
    const bool delay_mode = config.mode == "analyze-delay" || config.mode == "sweep-slot" ||
                            config.mode == "sweep-minbe" ||
                            (config.mode == "compare" && has_delay) ||
                            (config.mode == "fairness" && has_delay);
    if (delay_mode) {
        for (int n : config.n_list) {
            if (n != 2) {
                throw ConfigError("delay analysis supports n=2 only");
            }
        }
    }
    if (config.mode == "fairness" && !config.frame_lengths.empty() && has_delay) {
        throw ConfigError("frame-based fairness index is defined for zero delay only");
    }
    if (config.mode == "sweep-slot" && config.delta_list.empty() &&
        config.timing.prop_delay_us <= 0.0) {
        throw ConfigError("sweep-slot needs delta_us");
    }
    if (config.mode == "sweep-minbe" && config.minbe_lo > config.minbe_hi) {
        throw ConfigError("sweep-minbe needs a valid minbe_range");
    }
}

}  // namespace csmakit

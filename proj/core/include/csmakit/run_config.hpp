#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "csmakit/schedule.hpp"
#include "csmakit/timing.hpp"

namespace csmakit {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Run description shared by the CLI and the programmatic runner. Parsed from
// flat key=value lines; lists are comma separated, ranges written lo..hi.
struct RunConfig {
    std::string mode;
    BackoffSchedule schedule = BackoffSchedule::default_80211b();
    PhyTiming timing = PhyTiming::default_80211b();
    std::vector<int> n_list = {2};
    std::vector<int> delta_list; // us; empty means timing.prop_delay_us
    bool delta_r_given = false;
    std::int64_t cycles = 1000000;
    std::uint64_t seed = 1;
    int window = 0;
    std::vector<int> frame_lengths;                              // L values
    double run_length_max = std::numeric_limits<double>::infinity(); // EU_1 bound
    int minbe_lo = -1;
    int minbe_hi = -1;
    int m_max = 12;
    double t_end = 10000.0; // mean-field integration horizon
    std::string out_dir = ".";
    std::string label = "run";
    bool trace = false;
    // Exponential-schedule generator parameters (used without schedule=).
    int gen_minbe = 5;
    int gen_multiplier = 2;
    int gen_maxbe = 10;
    int gen_retry = 6;
};

// Parses configuration text (key=value per line, '#' comments) and applies
// the override assignments on top, then validates. Throws ConfigError.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});

// Mode-specific consistency checks; throws ConfigError.
void validate_config(const RunConfig& config);

}  // namespace csmakit

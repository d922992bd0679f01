#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "csmakit/run_config.hpp"
#include "csmakit/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw csmakit::ConfigError("cannot read config file " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Saturated CSMA/CA analysis and simulation toolkit"};
    app.footer("Configuration file format: one key=value per line, '#' comments.\n"
               "Flags override file settings.");

    std::string config_path;
    std::string mode, n, delta_us, sigma_us, cycles, seed, window, frames, eu1_max, minbe_range,
        out_dir, label;
    bool trace = false;

    app.add_option("--config", config_path, "Configuration file (key=value lines)");
    app.add_option("--mode", mode,
                   "simulate | analyze-zero | analyze-delay | bianchi | meanfield | fairness | "
                   "sweep-slot | sweep-minbe | compare");
    app.add_option("--n", n, "Node count, list (2,5,10) or range (2..10)");
    app.add_option("--delta-us", delta_us, "Propagation delay in us, list or range");
    app.add_option("--sigma-us", sigma_us, "Backoff slot duration in us");
    app.add_option("--cycles", cycles, "Simulated transmission cycles");
    app.add_option("--seed", seed, "Simulation seed");
    app.add_option("--window", window, "Short-term window in cycles");
    app.add_option("--L", frames, "Frame lengths for the fairness index, list or range");
    app.add_option("--eu1-max", eu1_max, "Mean success-run constraint for sweep-minbe");
    app.add_option("--minbe-range", minbe_range, "Initial-exponent range, e.g. 0..10");
    app.add_option("--out", out_dir, "Output directory for CSV files");
    app.add_option("--label", label, "Output file label");
    app.add_flag("--trace", trace, "Write the per-cycle trace CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        std::vector<std::string> overrides;
        auto add = [&overrides](const std::string& key, const std::string& value) {
            if (!value.empty()) {
                overrides.push_back(key + "=" + value);
            }
        };
        add("mode", mode);
        add("n", n);
        add("delta_us", delta_us);
        add("sigma_us", sigma_us);
        add("cycles", cycles);
        add("seed", seed);
        add("window", window);
        add("L", frames);
        add("eu1_max", eu1_max);
        add("minbe_range", minbe_range);
        add("out", out_dir);
        add("label", label);
        if (trace) {
            overrides.push_back("trace=1");
        }

        const std::string text = config_path.empty() ? std::string{} : read_file(config_path);
        const csmakit::RunConfig config = csmakit::parse_config(text, overrides);
        csmakit::run(config);
        return 0;
    } catch (const csmakit::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}

#include "csmakit/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <stdexcept>
#include <vector>

#include "csmakit/bianchi.hpp"
#include "csmakit/fairness.hpp"
#include "csmakit/meanfield.hpp"
#include "csmakit/mrp_delay.hpp"
#include "csmakit/mrp_zero.hpp"
#include "csmakit/optimize.hpp"
#include "csmakit/sim.hpp"

namespace csmakit {

namespace {

std::ofstream open_csv(const RunConfig& config, const std::string& suffix) {
    std::filesystem::create_directories(config.out_dir);
    const std::filesystem::path path =
        std::filesystem::path(config.out_dir) / (config.mode + "_" + config.label + suffix +
                                                 ".csv");
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open output file " + path.string());
    }
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "nan"; }

PhyTiming timing_for_delta(const RunConfig& config, int delta_us) {
    PhyTiming timing = config.timing;
    timing.prop_delay_us = static_cast<double>(delta_us);
    if (!config.delta_r_given) {
        timing.rx_prop_delay_us = timing.prop_delay_us;
    }
    return timing;
}

std::vector<int> effective_deltas(const RunConfig& config) {
    if (!config.delta_list.empty()) {
        return config.delta_list;
    }
    return {static_cast<int>(config.timing.prop_delay_us)};
}

SimStats simulate_point(const RunConfig& config, int n, const PhyTiming& timing,
                        std::uint64_t seed_offset) {
    SimConfig sim;
    sim.schedule = config.schedule;
    sim.timing = timing;
    sim.n = n;
    sim.cycles = config.cycles;
    sim.seed = config.seed + seed_offset;
    sim.record_trace = config.trace || config.window > 0;
    return run_sim(sim);
}

template <typename T>
std::vector<T> parallel_map(std::size_t count, const std::function<T(std::size_t)>& fn) {
    std::vector<std::future<T>> futures;
    futures.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        futures.push_back(std::async(std::launch::async, fn, i));
    }
    std::vector<T> results;
    results.reserve(count);
    for (auto& f : futures) {
        results.push_back(f.get());
    }
    return results;
}

void run_simulate(const RunConfig& config) {
    const int n = config.n_list.front();
    const PhyTiming timing = timing_for_delta(config, effective_deltas(config).front());
    const SimStats stats = simulate_point(config, n, timing, 0);
    const ConditionalRateEstimate rates = estimate_conditional_rates(stats);

    std::ofstream out = open_csv(config, "");
    out << "n,m,cycles,seed,gamma,theta,beta_d,beta_s,beta_c,beta\n";
    out << n << ',' << timing.prop_slots() << ',' << stats.cycles << ',' << config.seed << ','
        << fmt(stats.collision_prob()) << ',' << fmt(stats.throughput()) << ','
        << fmt_opt(rates.after_interruption) << ',' << fmt_opt(rates.after_success) << ','
        << fmt_opt(rates.after_collision) << ',' << fmt_opt(rates.overall) << '\n';

    if (config.trace) {
        std::ofstream trace_out = open_csv(config, "_trace");
        write_trace_csv(trace_out, stats.trace);
    }
    if (config.window > 0) {
        const WindowedUnfairness windows = windowed_unfairness(stats.trace, config.window, n);
        std::ofstream wout = open_csv(config, "_window");
        wout << "window,node,attempts,collisions,gamma_short\n";
        for (const auto& point : windows.points) {
            wout << point.window << ',' << point.node << ',' << point.attempts << ','
                 << point.collisions << ',' << fmt(point.short_term_collision_prob) << '\n';
        }
    }
}

void run_analyze_zero(const RunConfig& config) {
    std::function<PerformanceReport(std::size_t)> job = [&](std::size_t i) {
        return analyze_zero_delay(config.schedule, config.n_list[i], config.timing);
    };
    const auto reports = parallel_map<PerformanceReport>(config.n_list.size(), job);
    std::ofstream out = open_csv(config, "");
    out << "n,gamma,theta,beta_d,beta_s,beta_c,beta\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const PerformanceReport& r = reports[i];
        out << config.n_list[i] << ',' << fmt(r.collision_prob) << ',' << fmt(r.throughput)
            << ',' << fmt(r.rates.after_interruption) << ',' << fmt(r.rates.after_success) << ','
            << fmt(r.rates.after_collision) << ',' << fmt(r.rates.overall) << '\n';
    }
}

void run_analyze_delay(const RunConfig& config) {
    const std::vector<int> deltas = effective_deltas(config);
    std::function<PerformanceReport(std::size_t)> job = [&](std::size_t i) {
        return analyze_delay(config.schedule, timing_for_delta(config, deltas[i]));
    };
    const auto reports = parallel_map<PerformanceReport>(deltas.size(), job);
    std::ofstream out = open_csv(config, "");
    out << "m,delta_us,sigma_us,gamma,theta,beta_d,beta_s,beta_c,beta\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const PhyTiming timing = timing_for_delta(config, deltas[i]);
        const PerformanceReport& r = reports[i];
        out << timing.prop_slots() << ',' << deltas[i] << ','
            << static_cast<int>(timing.slot_us) << ',' << fmt(r.collision_prob) << ','
            << fmt(r.throughput) << ',' << fmt(r.rates.after_interruption) << ','
            << fmt(r.rates.after_success) << ',' << fmt(r.rates.after_collision) << ','
            << fmt(r.rates.overall) << '\n';
    }
}

void run_bianchi(const RunConfig& config) {
    std::ofstream out = open_csv(config, "");
    out << "n,gamma_fp\n";
    for (int n : config.n_list) {
        const BianchiFixedPoint fp = solve_bianchi_fixed_point(config.schedule, n);
        out << n << ',' << fmt(fp.collision_prob) << '\n';
    }
}

void run_meanfield(const RunConfig& config) {
    const Eigen::VectorXd p = stage_attempt_intensities(config.schedule);
    const int K = config.schedule.retry_limit();
    std::vector<Eigen::VectorXd> starts;
    Eigen::VectorXd start = Eigen::VectorXd::Zero(K + 1);
    start[0] = 1.0;
    starts.push_back(start);
    starts.push_back(Eigen::VectorXd::Constant(K + 1, 1.0 / (K + 1)));
    start.setZero();
    start[K] = 1.0;
    starts.push_back(start);
    for (std::size_t s = 0; s < starts.size(); ++s) {
        const OdeTrajectory traj = integrate_mean_field(starts[s], p, config.t_end);
        std::ofstream out = open_csv(config, "_start" + std::to_string(s));
        out << "t,norm_diff\n";
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            out << fmt(traj.times[i]) << ',' << fmt(traj.distance_to_stationary[i]) << '\n';
        }
    }
}

void run_fairness(const RunConfig& config) {
    const std::vector<int> deltas = effective_deltas(config);
    const bool has_delay = deltas.front() > 0;
    if (!config.frame_lengths.empty()) {
        const int n = config.n_list.front();
        const RateSolve solve = solve_rates_zero_delay(config.schedule, n);
        std::ofstream out = open_csv(config, "_jain");
        out << "L,J\n";
        for (int frame : config.frame_lengths) {
            out << frame << ',' << fmt(jain_index(solve.rates, n, frame)) << '\n';
        }
    }
    std::ofstream out = open_csv(config, "");
    out << "param,r11,EU1\n";
    if (config.minbe_lo >= 0) {
        const PhyTiming timing = timing_for_delta(config, deltas.front());
        const int m = timing.prop_slots();
        for (int be = config.minbe_lo; be <= config.minbe_hi; ++be) {
            const BackoffSchedule schedule = BackoffSchedule::exponential(
                be, config.gen_multiplier, config.gen_maxbe, config.gen_retry);
            const RateSolve solve = solve_rates_delay(schedule, m);
            const SuccessRun run = success_run_delay(solve.rates, m);
            out << be << ',' << fmt(run.repeat_prob) << ',' << fmt(run.mean_run_length) << '\n';
        }
    } else if (has_delay) {
        const PhyTiming timing = timing_for_delta(config, deltas.front());
        const int m = timing.prop_slots();
        const RateSolve solve = solve_rates_delay(config.schedule, m);
        const SuccessRun run = success_run_delay(solve.rates, m);
        out << m << ',' << fmt(run.repeat_prob) << ',' << fmt(run.mean_run_length) << '\n';
    } else {
        const int n = config.n_list.front();
        const RateSolve solve = solve_rates_zero_delay(config.schedule, n);
        const SuccessRun run = success_run_zero_delay(solve.rates, n);
        out << n << ',' << fmt(run.repeat_prob) << ',' << fmt(run.mean_run_length) << '\n';
    }
}

void run_sweep_slot(const RunConfig& config) {
    const int delta = effective_deltas(config).front();
    const SlotSweepResult sweep =
        throughput_vs_m(delta, config.m_max, config.schedule, config.timing);
    std::ofstream out = open_csv(config, "");
    out << "m,sigma_us,theta\n";
    for (const SlotSweepPoint& point : sweep.points) {
        if (point.feasible) {
            out << point.m << ',' << point.sigma_us << ',' << fmt(point.report.throughput)
                << '\n';
        }
    }
}

void run_sweep_minbe(const RunConfig& config) {
    const PhyTiming timing = timing_for_delta(config, effective_deltas(config).front());
    const int m = timing.prop_slots();
    const int lo = config.minbe_lo >= 0 ? config.minbe_lo : 0;
    const int hi = config.minbe_hi >= 0 ? config.minbe_hi : config.gen_maxbe;
    const MinBeSweepResult sweep =
        optimize_minbe(config.run_length_max, lo, hi, config.gen_multiplier, config.gen_maxbe,
                       config.gen_retry, m, config.timing);
    std::ofstream out = open_csv(config, "");
    out << "minBE,EU1,feasible,theta\n";
    for (const MinBeSweepPoint& point : sweep.points) {
        out << point.min_be << ',' << fmt(point.mean_success_run) << ','
            << (point.feasible ? 1 : 0) << ',' << fmt(point.throughput) << '\n';
    }
    if (!sweep.best_min_be) {
        std::fprintf(stderr, "sweep-minbe: no exponent meets the EU1 constraint\n");
    }
}

void run_compare(const RunConfig& config) {
    const std::vector<int> deltas = effective_deltas(config);
    const bool has_delay = deltas.front() > 0 || deltas.size() > 1;
    std::ofstream out = open_csv(config, "");
    if (!has_delay) {
        struct Row {
            SimStats stats;
            PerformanceReport mrp;
            BianchiFixedPoint fp;
        };
        std::function<Row(std::size_t)> job = [&](std::size_t i) {
            const int n = config.n_list[i];
            Row row;
            row.stats = simulate_point(config, n, config.timing, i);
            row.mrp = analyze_zero_delay(config.schedule, n, config.timing);
            row.fp = solve_bianchi_fixed_point(config.schedule, n);
            return row;
        };
        const auto rows = parallel_map<Row>(config.n_list.size(), job);
        out << "n,gamma_sim,gamma_mrp,gamma_bianchi,theta_sim,theta_mrp,"
               "beta_d,beta_s,beta_c,beta,err_gamma,err_theta\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Row& row = rows[i];
            const double gamma_sim = row.stats.collision_prob();
            const double theta_sim = row.stats.throughput();
            out << config.n_list[i] << ',' << fmt(gamma_sim) << ','
                << fmt(row.mrp.collision_prob) << ',' << fmt(row.fp.collision_prob) << ','
                << fmt(theta_sim) << ',' << fmt(row.mrp.throughput) << ','
                << fmt(row.mrp.rates.after_interruption) << ','
                << fmt(row.mrp.rates.after_success) << ',' << fmt(row.mrp.rates.after_collision)
                << ',' << fmt(row.mrp.rates.overall) << ','
                << fmt((row.mrp.collision_prob - gamma_sim) / gamma_sim) << ','
                << fmt((row.mrp.throughput - theta_sim) / theta_sim) << '\n';
        }
    } else {
        struct Row {
            SimStats stats;
            PerformanceReport mrp;
        };
        std::function<Row(std::size_t)> job = [&](std::size_t i) {
            const PhyTiming timing = timing_for_delta(config, deltas[i]);
            Row row;
            row.stats = simulate_point(config, 2, timing, i);
            row.mrp = analyze_delay(config.schedule, timing);
            return row;
        };
        const auto rows = parallel_map<Row>(deltas.size(), job);
        out << "m,delta_us,sigma_us,gamma_sim,gamma_mrp,theta_sim,theta_mrp,"
               "beta_d,beta_s,beta_c,beta,err_gamma,err_theta\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const PhyTiming timing = timing_for_delta(config, deltas[i]);
            const Row& row = rows[i];
            const double gamma_sim = row.stats.collision_prob();
            const double theta_sim = row.stats.throughput();
            out << timing.prop_slots() << ',' << deltas[i] << ','
                << static_cast<int>(timing.slot_us) << ',' << fmt(gamma_sim) << ','
                << fmt(row.mrp.collision_prob) << ',' << fmt(theta_sim) << ','
                << fmt(row.mrp.throughput) << ',' << fmt(row.mrp.rates.after_interruption) << ','
                << fmt(row.mrp.rates.after_success) << ',' << fmt(row.mrp.rates.after_collision)
                << ',' << fmt(row.mrp.rates.overall) << ','
                << fmt((row.mrp.collision_prob - gamma_sim) / gamma_sim) << ','
                << fmt((row.mrp.throughput - theta_sim) / theta_sim) << '\n';
        }
    }
}

}  // namespace

void run(const RunConfig& config) {
    validate_config(config);
    if (config.mode == "simulate") {
        run_simulate(config);
    } else if (config.mode == "analyze-zero") {
        run_analyze_zero(config);
    } else if (config.mode == "analyze-delay") {
        run_analyze_delay(config);
    } else if (config.mode == "bianchi") {
        run_bianchi(config);
    } else if (config.mode == "meanfield") {
        run_meanfield(config);
    } else if (config.mode == "fairness") {
        run_fairness(config);
    } else if (config.mode == "sweep-slot") {
        run_sweep_slot(config);
    } else if (config.mode == "sweep-minbe") {
        run_sweep_minbe(config);
    } else if (config.mode == "compare") {
        run_compare(config);
    } else {
        throw ConfigError("unknown mode '" + config.mode + "'");
    }
}

}  // namespace csmakit

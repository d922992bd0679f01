#include "csmakit/optimize.hpp"

#include <stdexcept>

#include "csmakit/fairness.hpp"
#include "csmakit/mrp_delay.hpp"

namespace csmakit {

int least_slot_for_m(int delta_us, int m) {
    if (delta_us <= 0 || m < 0) {
        throw std::invalid_argument("need delta > 0 and m >= 0");
    }
    return delta_us / (m + 1) + 1;
}

bool least_slot_feasible(int delta_us, int m) {
    const int sigma = least_slot_for_m(delta_us, m);
    return delta_us / sigma == m;
}

SlotSweepResult throughput_vs_m(int delta_us, int m_max, const BackoffSchedule& schedule,
                                const PhyTiming& timing_template) {
    SlotSweepResult result;
    result.points.reserve(static_cast<std::size_t>(m_max) + 1);
    for (int m = 0; m <= m_max; ++m) {
        SlotSweepPoint point;
        point.m = m;
        point.sigma_us = least_slot_for_m(delta_us, m);
        point.feasible = least_slot_feasible(delta_us, m);
        if (point.feasible) {
            PhyTiming timing = timing_template;
            timing.slot_us = point.sigma_us;
            timing.prop_delay_us = delta_us;
            timing.rx_prop_delay_us = delta_us;
            point.report = analyze_delay(schedule, timing);
            if (result.best_m < 0 ||
                point.report.throughput >
                    result.points[static_cast<std::size_t>(result.best_m)].report.throughput) {
                result.best_m = m;
            }
        }
        result.points.push_back(point);
    }
    if (result.best_m >= 0) {
        // best_m currently indexes into points; map it to the m value.
        result.best_m = result.points[static_cast<std::size_t>(result.best_m)].m;
    }
    return result;
}

MinBeSweepResult optimize_minbe(double run_length_max, int minbe_lo, int minbe_hi,
                                int multiplier, int max_be, int retry_limit, int m,
                                const PhyTiming& timing_template) {
    if (minbe_lo > minbe_hi) {
        throw std::invalid_argument("empty exponent range");
    }
    PhyTiming timing = timing_template;
    timing.prop_delay_us = m * timing.slot_us;
    timing.rx_prop_delay_us = timing.prop_delay_us;

    MinBeSweepResult result;
    double best_theta = 0.0;
    for (int be = minbe_lo; be <= minbe_hi; ++be) {
        const BackoffSchedule schedule =
            BackoffSchedule::exponential(be, multiplier, max_be, retry_limit);
        const RateSolve solve = solve_rates_delay(schedule, m);
        if (!solve.converged) {
            throw std::runtime_error("rate solve did not converge for exponent " +
                                     std::to_string(be));
        }
        const SuccessRun run = success_run_delay(solve.rates, m);
        const GammaTheta perf = performance_delay(solve.rates, m, timing);
        MinBeSweepPoint point;
        point.min_be = be;
        point.repeat_prob = run.repeat_prob;
        point.mean_success_run = run.mean_run_length;
        point.feasible = run.mean_run_length < run_length_max;
        point.throughput = perf.throughput;
        if (point.feasible && (!result.best_min_be || point.throughput > best_theta)) {
            result.best_min_be = be;
            best_theta = point.throughput;
        }
        result.points.push_back(point);
    }
    return result;
}

}  // namespace csmakit

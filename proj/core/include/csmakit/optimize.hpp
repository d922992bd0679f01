#pragma once

#include <optional>
#include <vector>

#include "csmakit/rates.hpp"
#include "csmakit/schedule.hpp"
#include "csmakit/timing.hpp"

namespace csmakit {

// Smallest integer slot duration (us) with floor(delta / sigma) == m:
// floor(delta / (m+1)) + 1. Not every (delta, m) is feasible; see
// least_slot_feasible.
int least_slot_for_m(int delta_us, int m);
bool least_slot_feasible(int delta_us, int m);

struct SlotSweepPoint {
    int m = 0;
    int sigma_us = 0;
    bool feasible = false;
    PerformanceReport report;
};

struct SlotSweepResult {
    std::vector<SlotSweepPoint> points;
    int best_m = -1; // throughput argmax over feasible points, ties toward smaller m
};

// Theta as a function of m for a fixed propagation delay, each m evaluated at
// its least slot duration (n = 2). timing_template supplies packet and
// overhead durations; slot and propagation delays are overridden per point.
SlotSweepResult throughput_vs_m(int delta_us, int m_max, const BackoffSchedule& schedule,
                                const PhyTiming& timing_template);

struct MinBeSweepPoint {
    int min_be = 0;
    double repeat_prob = 0.0;
    double mean_success_run = 0.0; // EU_1
    bool feasible = false;
    double throughput = 0.0;
};

struct MinBeSweepResult {
    std::vector<MinBeSweepPoint> points;
    std::optional<int> best_min_be; // empty when no point meets the constraint
};

// Maximize throughput over the initial backoff exponent subject to
// EU_1 < run_length_max, for n = 2 at propagation delay m (in slots of the
// template's slot duration). Rates are re-solved for every candidate
// schedule.
MinBeSweepResult optimize_minbe(double run_length_max, int minbe_lo, int minbe_hi,
                                int multiplier, int max_be, int retry_limit, int m,
                                const PhyTiming& timing_template);

}  // namespace csmakit

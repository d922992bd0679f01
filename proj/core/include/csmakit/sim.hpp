#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "csmakit/rates.hpp"
#include "csmakit/rng.hpp"
#include "csmakit/schedule.hpp"
#include "csmakit/timing.hpp"

namespace csmakit {

// Per-node state at a transmission-cycle boundary: backoff stage, residual
// backoff in slots, and misalignment of the backoff-counter start (0..m).
struct NodeState {
    int stage = 0;
    int residual = 1;
    int misalign = 0;
};

enum class CycleKind : std::uint8_t { Success, Collision };

struct CycleOutcome {
    CycleKind kind = CycleKind::Success;
    int winner = -1;                 // node id on success, -1 on collision
    std::uint64_t attacker_mask = 0; // bit i set iff node i attempted
    int attacker_count = 0;
    int idle_slots = 0;              // slots from cycle start to first attempt
    double duration_us = 0.0;        // filled by the caller from timing
    int new_misalign = 0;            // misalignment applied to non-last attackers
};

// One transmission cycle with aligned backoff counters (no propagation
// delay): the nodes with minimal residual attempt; the rest subtract the
// minimum and freeze. All misalignments stay zero.
CycleOutcome advance_cycle_zero_delay(std::vector<NodeState>& nodes,
                                      const BackoffSchedule& schedule,
                                      std::vector<RandomStream>& rngs);

// One transmission cycle with transmitter-to-transmitter delay of m slots:
// node i attempts iff residual + misalign <= min(residual + misalign) + m.
// On a collision the last attacker starts the next cycle aligned and every
// other node is deferred by the gap between the two latest attempt instants.
CycleOutcome advance_cycle_with_delay(std::vector<NodeState>& nodes,
                                      const BackoffSchedule& schedule, int m,
                                      std::vector<RandomStream>& rngs);

struct CycleRecord {
    CycleKind kind;
    std::int8_t winner;
    std::uint64_t attacker_mask;
    double duration_us;
    std::int32_t new_misalign;
};

struct SimStats {
    std::int64_t cycles = 0;
    std::int64_t success_cycles = 0;
    std::int64_t collision_cycles = 0;
    std::vector<std::int64_t> attempts;   // A_i
    std::vector<std::int64_t> collisions; // C_i
    double elapsed_us = 0.0;              // t
    double payload_us = 0.0;              // successful data time T(t)
    std::vector<int> success_sequence;    // winner ids (when recorded)
    std::vector<CycleRecord> trace;       // per-cycle records (when recorded)

    // Conditional tallies for attempt-rate estimation, per node.
    std::vector<std::int64_t> post_success_attempts;   // uninterrupted first segments
    std::vector<double> post_success_backoff;          // slots counted in them
    std::vector<std::int64_t> post_collision_attempts;
    std::vector<double> post_collision_backoff;
    std::vector<std::int64_t> interrupted_cycles;      // backoff cycles with an interruption
    std::vector<double> residual_after_interruption;   // B_r totals
    std::vector<std::int64_t> backoff_cycles;          // completed backoff cycles
    std::vector<double> total_backoff;                 // full draws counted in them

    double collision_prob() const;            // (1/n) sum C_i / A_i
    double node_collision_prob(int node) const;
    double throughput() const { return elapsed_us > 0.0 ? payload_us / elapsed_us : 0.0; }
};

struct SimConfig {
    BackoffSchedule schedule = BackoffSchedule::default_80211b();
    PhyTiming timing = PhyTiming::default_80211b();
    int n = 2;
    std::int64_t cycles = 1000000;
    std::uint64_t seed = 1;
    bool record_trace = false;
    bool record_success_sequence = false;
};

// Monte-Carlo run of the cycle-level model; deterministic for a given seed.
// Uses the delay transition kernel when timing.prop_slots() > 0 and the
// aligned kernel otherwise (the two coincide at m = 0).
SimStats run_sim(const SimConfig& config);

// Attempt rates estimated from the conditional tallies, averaged over nodes.
// A rate is absent when some node never contributed a sample of that kind.
struct ConditionalRateEstimate {
    std::optional<double> after_interruption;
    std::optional<double> after_success;
    std::optional<double> after_collision;
    std::optional<double> overall;

    AttemptRates require_all() const; // throws std::runtime_error when absent
};

ConditionalRateEstimate estimate_conditional_rates(const SimStats& stats);

// Slot-resolution reference model (m = 0 only): every slot decrements all
// residual backoffs; nodes reaching zero attempt and the outcome is resolved
// exactly as in the cycle model. With shared per-node streams it reproduces
// the cycle simulator's outcome sequence.
class SlotLevelSimulator {
  public:
    SlotLevelSimulator(const BackoffSchedule& schedule, int n, std::uint64_t seed);

    // Advance one slot; returns the outcome when the slot ends with channel
    // activity, std::nullopt for a pure countdown slot.
    std::optional<CycleOutcome> step();

    // Run until `cycles` activities have occurred.
    std::vector<CycleOutcome> run_cycles(std::int64_t cycles);

    const std::vector<NodeState>& nodes() const { return nodes_; }

  private:
    BackoffSchedule schedule_;
    std::vector<NodeState> nodes_;
    std::vector<RandomStream> rngs_;
    int pending_slots_ = 0; // slots counted down in the current cycle
};

// Short-term collision probabilities per node over consecutive-cycle windows.
struct WindowedUnfairness {
    struct Point {
        int window;
        int node;
        std::int64_t attempts;
        std::int64_t collisions;
        double short_term_collision_prob;
    };
    std::vector<Point> points; // windows with zero attempts for a node are omitted
    std::vector<double> long_run_per_node;
    double long_run_mean = 0.0;
};

WindowedUnfairness windowed_unfairness(const std::vector<CycleRecord>& trace, int window, int n);

// CSV export: cycle,kind,winner,attackers,duration_us,misalignment
void write_trace_csv(std::ostream& out, const std::vector<CycleRecord>& trace);

}  // namespace csmakit

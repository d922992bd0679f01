#include "csmakit/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace csmakit {

namespace {

void check_node_count(std::size_t n) {
    if (n < 1 || n > 64) {
        throw std::invalid_argument("simulator supports 1..64 nodes");
    }
}

}  // namespace

CycleOutcome advance_cycle_zero_delay(std::vector<NodeState>& nodes,
                                      const BackoffSchedule& schedule,
                                      std::vector<RandomStream>& rngs) {
    check_node_count(nodes.size());
    const int K = schedule.retry_limit();
    int min_residual = std::numeric_limits<int>::max();
    for (const NodeState& node : nodes) {
        min_residual = std::min(min_residual, node.residual);
    }
    CycleOutcome out;
    out.idle_slots = min_residual;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].residual == min_residual) {
            out.attacker_mask |= (std::uint64_t{1} << i);
            ++out.attacker_count;
        }
    }
    out.kind = out.attacker_count == 1 ? CycleKind::Success : CycleKind::Collision;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        NodeState& node = nodes[i];
        if (node.residual > min_residual) {
            node.residual -= min_residual;
            continue;
        }
        if (out.kind == CycleKind::Success) {
            out.winner = static_cast<int>(i);
            node.stage = 0;
        } else {
            node.stage = (node.stage + 1) % (K + 1);
        }
        node.residual = rngs[i].backoff_draw(schedule.window(node.stage));
    }
    return out;
}

CycleOutcome advance_cycle_with_delay(std::vector<NodeState>& nodes,
                                      const BackoffSchedule& schedule, int m,
                                      std::vector<RandomStream>& rngs) {
    check_node_count(nodes.size());
    if (m < 0) {
        throw std::invalid_argument("propagation delay in slots must be >= 0");
    }
    const int K = schedule.retry_limit();
    int first = std::numeric_limits<int>::max();
    for (const NodeState& node : nodes) {
        first = std::min(first, node.residual + node.misalign);
    }
    CycleOutcome out;
    out.idle_slots = first;
    // Attempt instants within the collision window [first, first + m].
    int last1 = -1; // latest attempt instant
    int last2 = -1; // second latest
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        int instant = nodes[i].residual + nodes[i].misalign;
        if (instant <= first + m) {
            out.attacker_mask |= (std::uint64_t{1} << i);
            ++out.attacker_count;
            if (instant >= last1) {
                last2 = last1;
                last1 = instant;
            } else if (instant > last2) {
                last2 = instant;
            }
        }
    }
    out.kind = out.attacker_count == 1 ? CycleKind::Success : CycleKind::Collision;
    int zplus = 0;
    if (out.kind == CycleKind::Collision) {
        zplus = last1 - last2; // 0 when the two latest instants coincide
    }
    out.new_misalign = zplus;
    bool aligned_assigned = false;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        NodeState& node = nodes[i];
        int instant = node.residual + node.misalign;
        if (instant > first + m) {
            node.residual = instant - (first + m);
            node.misalign = out.kind == CycleKind::Success ? 0 : zplus;
            continue;
        }
        if (out.kind == CycleKind::Success) {
            out.winner = static_cast<int>(i);
            node.stage = 0;
            node.misalign = 0;
        } else {
            node.stage = (node.stage + 1) % (K + 1);
            if (!aligned_assigned && instant == last1) {
                node.misalign = 0; // the last attacker resumes first
                aligned_assigned = true;
            } else {
                node.misalign = zplus;
            }
        }
        node.residual = rngs[i].backoff_draw(schedule.window(node.stage));
    }
    return out;
}

namespace {

std::vector<NodeState> initial_nodes(const BackoffSchedule& schedule, int n,
                                     std::vector<RandomStream>& rngs) {
    std::vector<NodeState> nodes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        nodes[static_cast<std::size_t>(i)].residual =
            rngs[static_cast<std::size_t>(i)].backoff_draw(schedule.window(0));
    }
    return nodes;
}

std::vector<RandomStream> node_streams(std::uint64_t seed, int n) {
    std::vector<RandomStream> rngs;
    rngs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rngs.emplace_back(seed, static_cast<std::uint64_t>(i));
    }
    return rngs;
}

enum class PrevCycle : std::uint8_t { None, OwnSuccess, OwnCollision };

}  // namespace

double SimStats::node_collision_prob(int node) const {
    auto i = static_cast<std::size_t>(node);
    return attempts[i] > 0 ? static_cast<double>(collisions[i]) / static_cast<double>(attempts[i])
                           : 0.0;
}

double SimStats::collision_prob() const {
    double sum = 0.0;
    int counted = 0;
    for (std::size_t i = 0; i < attempts.size(); ++i) {
        if (attempts[i] > 0) {
            sum += node_collision_prob(static_cast<int>(i));
            ++counted;
        }
    }
    return counted > 0 ? sum / counted : 0.0;
}

SimStats run_sim(const SimConfig& config) {
    config.timing.validate();
    if (config.cycles < 1) {
        throw std::invalid_argument("need at least one cycle");
    }
    const int n = config.n;
    check_node_count(static_cast<std::size_t>(n));
    const int m = config.timing.prop_slots();
    const bool delayed = m > 0;

    std::vector<RandomStream> rngs = node_streams(config.seed, n);
    std::vector<NodeState> nodes = initial_nodes(config.schedule, n, rngs);

    SimStats stats;
    auto un = static_cast<std::size_t>(n);
    stats.attempts.assign(un, 0);
    stats.collisions.assign(un, 0);
    stats.post_success_attempts.assign(un, 0);
    stats.post_success_backoff.assign(un, 0.0);
    stats.post_collision_attempts.assign(un, 0);
    stats.post_collision_backoff.assign(un, 0.0);
    stats.interrupted_cycles.assign(un, 0);
    stats.residual_after_interruption.assign(un, 0.0);
    stats.backoff_cycles.assign(un, 0);
    stats.total_backoff.assign(un, 0.0);

    const double success_us = success_cycle_duration_us(config.timing, true);
    const double collision_us = collision_cycle_duration_us(config.timing, true);

    std::vector<PrevCycle> prev(un, PrevCycle::None);
    std::vector<bool> interrupted(un, false);
    std::vector<int> draw(un, 0); // backoff sampled at the current backoff-cycle start
    for (int i = 0; i < n; ++i) {
        draw[static_cast<std::size_t>(i)] = nodes[static_cast<std::size_t>(i)].residual;
    }

    std::vector<int> old_residual(un);
    for (std::int64_t c = 0; c < config.cycles; ++c) {
        for (std::size_t i = 0; i < un; ++i) {
            old_residual[i] = nodes[i].residual;
        }
        CycleOutcome out = delayed ? advance_cycle_with_delay(nodes, config.schedule, m, rngs)
                                   : advance_cycle_zero_delay(nodes, config.schedule, rngs);
        out.duration_us = out.idle_slots * config.timing.slot_us +
                          (out.kind == CycleKind::Success ? success_us : collision_us);

        ++stats.cycles;
        stats.elapsed_us += out.duration_us;
        if (out.kind == CycleKind::Success) {
            ++stats.success_cycles;
            stats.payload_us += config.timing.data_us;
            if (config.record_success_sequence) {
                stats.success_sequence.push_back(out.winner);
            }
        } else {
            ++stats.collision_cycles;
        }
        if (config.record_trace) {
            stats.trace.push_back(CycleRecord{out.kind, static_cast<std::int8_t>(out.winner),
                                              out.attacker_mask, out.duration_us,
                                              out.new_misalign});
        }

        for (std::size_t i = 0; i < un; ++i) {
            const bool attacked = (out.attacker_mask >> i) & 1u;
            if (attacked) {
                ++stats.attempts[i];
                if (out.kind == CycleKind::Collision) {
                    ++stats.collisions[i];
                }
                if (prev[i] != PrevCycle::None) {
                    ++stats.backoff_cycles[i];
                    stats.total_backoff[i] += draw[i];
                    if (!interrupted[i]) {
                        // The whole backoff ran inside one transmission cycle.
                        if (prev[i] == PrevCycle::OwnSuccess) {
                            ++stats.post_success_attempts[i];
                            stats.post_success_backoff[i] += draw[i];
                        } else {
                            ++stats.post_collision_attempts[i];
                            stats.post_collision_backoff[i] += draw[i];
                        }
                    }
                }
                prev[i] = out.kind == CycleKind::Success ? PrevCycle::OwnSuccess
                                                         : PrevCycle::OwnCollision;
                interrupted[i] = false;
                draw[i] = nodes[i].residual; // fresh draw for the next backoff cycle
            } else if (prev[i] != PrevCycle::None && !interrupted[i]) {
                // First interruption in this backoff cycle.
                interrupted[i] = true;
                double counted = static_cast<double>(old_residual[i] - nodes[i].residual);
                if (prev[i] == PrevCycle::OwnSuccess) {
                    stats.post_success_backoff[i] += counted;
                } else {
                    stats.post_collision_backoff[i] += counted;
                }
                ++stats.interrupted_cycles[i];
                stats.residual_after_interruption[i] += nodes[i].residual;
            }
        }
    }
    return stats;
}

AttemptRates ConditionalRateEstimate::require_all() const {
    if (!after_interruption || !after_success || !after_collision || !overall) {
        throw std::runtime_error("conditional attempt-rate estimate incomplete");
    }
    return AttemptRates{*after_interruption, *after_success, *after_collision, *overall};
}

ConditionalRateEstimate estimate_conditional_rates(const SimStats& stats) {
    const std::size_t n = stats.attempts.size();
    ConditionalRateEstimate est;
    double d_sum = 0.0, s_sum = 0.0, c_sum = 0.0, o_sum = 0.0;
    bool d_ok = true, s_ok = true, c_ok = true, o_ok = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (stats.residual_after_interruption[i] > 0.0) {
            d_sum += stats.interrupted_cycles[i] / stats.residual_after_interruption[i];
        } else {
            d_ok = false;
        }
        if (stats.post_success_backoff[i] > 0.0) {
            s_sum += stats.post_success_attempts[i] / stats.post_success_backoff[i];
        } else {
            s_ok = false;
        }
        if (stats.post_collision_backoff[i] > 0.0) {
            c_sum += stats.post_collision_attempts[i] / stats.post_collision_backoff[i];
        } else {
            c_ok = false;
        }
        if (stats.total_backoff[i] > 0.0) {
            o_sum += stats.backoff_cycles[i] / stats.total_backoff[i];
        } else {
            o_ok = false;
        }
    }
    auto dn = static_cast<double>(n);
    if (d_ok) est.after_interruption = d_sum / dn;
    if (s_ok) est.after_success = s_sum / dn;
    if (c_ok) est.after_collision = c_sum / dn;
    if (o_ok) est.overall = o_sum / dn;
    return est;
}

SlotLevelSimulator::SlotLevelSimulator(const BackoffSchedule& schedule, int n, std::uint64_t seed)
    : schedule_(schedule), rngs_(node_streams(seed, n)) {
    check_node_count(static_cast<std::size_t>(n));
    nodes_ = initial_nodes(schedule_, n, rngs_);
}

std::optional<CycleOutcome> SlotLevelSimulator::step() {
    ++pending_slots_;
    const int K = schedule_.retry_limit();
    CycleOutcome out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].residual - pending_slots_ == 0) {
            out.attacker_mask |= (std::uint64_t{1} << i);
            ++out.attacker_count;
        }
    }
    if (out.attacker_count == 0) {
        return std::nullopt;
    }
    out.idle_slots = pending_slots_;
    out.kind = out.attacker_count == 1 ? CycleKind::Success : CycleKind::Collision;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        NodeState& node = nodes_[i];
        if (!((out.attacker_mask >> i) & 1u)) {
            node.residual -= pending_slots_;
            continue;
        }
        if (out.kind == CycleKind::Success) {
            out.winner = static_cast<int>(i);
            node.stage = 0;
        } else {
            node.stage = (node.stage + 1) % (K + 1);
        }
        node.residual = rngs_[i].backoff_draw(schedule_.window(node.stage));
    }
    pending_slots_ = 0;
    return out;
}

std::vector<CycleOutcome> SlotLevelSimulator::run_cycles(std::int64_t cycles) {
    std::vector<CycleOutcome> outcomes;
    outcomes.reserve(static_cast<std::size_t>(cycles));
    while (static_cast<std::int64_t>(outcomes.size()) < cycles) {
        if (auto out = step()) {
            outcomes.push_back(*out);
        }
    }
    return outcomes;
}

WindowedUnfairness windowed_unfairness(const std::vector<CycleRecord>& trace, int window, int n) {
    if (trace.empty()) {
        throw std::invalid_argument("empty trace");
    }
    if (window < 1) {
        throw std::invalid_argument("window must be >= 1");
    }
    check_node_count(static_cast<std::size_t>(n));
    WindowedUnfairness result;
    auto un = static_cast<std::size_t>(n);
    std::vector<std::int64_t> total_attempts(un, 0), total_collisions(un, 0);
    std::vector<std::int64_t> win_attempts(un, 0), win_collisions(un, 0);
    int window_index = 0;
    std::int64_t in_window = 0;

    auto flush = [&]() {
        for (std::size_t i = 0; i < un; ++i) {
            if (win_attempts[i] > 0) {
                result.points.push_back(
                    {window_index, static_cast<int>(i), win_attempts[i], win_collisions[i],
                     static_cast<double>(win_collisions[i]) /
                         static_cast<double>(win_attempts[i])});
            }
            win_attempts[i] = 0;
            win_collisions[i] = 0;
        }
        ++window_index;
        in_window = 0;
    };

    for (const CycleRecord& rec : trace) {
        for (std::size_t i = 0; i < un; ++i) {
            if ((rec.attacker_mask >> i) & 1u) {
                ++win_attempts[i];
                ++total_attempts[i];
                if (rec.kind == CycleKind::Collision) {
                    ++win_collisions[i];
                    ++total_collisions[i];
                }
            }
        }
        if (++in_window == window) {
            flush();
        }
    }
    if (in_window > 0) {
        flush();
    }

    result.long_run_per_node.assign(un, 0.0);
    double mean = 0.0;
    for (std::size_t i = 0; i < un; ++i) {
        double g = total_attempts[i] > 0 ? static_cast<double>(total_collisions[i]) /
                                               static_cast<double>(total_attempts[i])
                                         : 0.0;
        result.long_run_per_node[i] = g;
        mean += g;
    }
    result.long_run_mean = mean / static_cast<double>(n);
    return result;
}

void write_trace_csv(std::ostream& out, const std::vector<CycleRecord>& trace) {
    out << "cycle,kind,winner,attackers,duration_us,misalignment\n";
    char buf[128];
    for (std::size_t c = 0; c < trace.size(); ++c) {
        const CycleRecord& rec = trace[c];
        int count = 0;
        for (std::uint64_t mask = rec.attacker_mask; mask != 0; mask &= mask - 1) {
            ++count;
        }
        std::snprintf(buf, sizeof(buf), "%zu,%s,%d,%d,%.0f,%d\n", c,
                      rec.kind == CycleKind::Success ? "success" : "collision",
                      static_cast<int>(rec.winner), count, rec.duration_us, rec.new_misalign);
        out << buf;
    }
}

}  // namespace csmakit

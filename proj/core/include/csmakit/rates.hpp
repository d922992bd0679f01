#pragma once

#include <optional>

namespace csmakit {

// Per-slot attempt probabilities conditioned on what the node's previous
// transmission cycle looked like from its own perspective: its backoff was
// interrupted, its own transmission succeeded, or its own transmission
// collided. overall is the long-run attempt rate over all backoff time.
struct AttemptRates {
    double after_interruption = 0.0; // beta_d
    double after_success = 0.0;      // beta_s
    double after_collision = 0.0;    // beta_c
    double overall = 0.0;            // beta

    static AttemptRates uniform(double beta) { return {beta, beta, beta, beta}; }
};

// Rate used by a node that attempted in the previous cycle: the lone
// successful node keeps its post-success rate, colliders their post-collision
// rate. Centralized so every chain builder uses the same convention.
inline double attacker_rate(const AttemptRates& rates, int attackers) {
    return attackers == 1 ? rates.after_success : rates.after_collision;
}

struct FairnessSummary {
    double jain_index = 0.0;
    double mean_success_run = 0.0; // EU_1
};

enum class ResultSource { Simulation, MrpAnalysis, Bianchi, MeanField };

struct PerformanceReport {
    double collision_prob = 0.0; // gamma
    double throughput = 0.0;     // Theta, normalized
    AttemptRates rates;
    ResultSource source = ResultSource::MrpAnalysis;
    std::optional<FairnessSummary> fairness;
};

}  // namespace csmakit

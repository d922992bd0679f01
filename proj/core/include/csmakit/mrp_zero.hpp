#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <vector>

#include "csmakit/rates.hpp"
#include "csmakit/schedule.hpp"
#include "csmakit/timing.hpp"

namespace csmakit {

struct GammaTheta {
    double collision_prob = 0.0;
    double throughput = 0.0;
};

// --- System-level chain over the number of attackers in the previous cycle.

// Probability that exactly `attackers_next` nodes attempt together in a
// backoff slot when `attackers_prev` nodes carry the attacker rate and the
// rest the post-interruption rate. attackers_next may be 0 (idle slot).
double joint_attempt_prob(int attackers_prev, int attackers_next, const AttemptRates& rates,
                          int n);

// Renewal-conditioned transition matrix over attacker counts 1..n
// (row/column index k maps to n_a = k + 1). Throws std::invalid_argument when
// some row's activity probability is zero (all-zero rates).
Eigen::MatrixXd cycle_transition_matrix(const AttemptRates& rates, int n);

// Long-run collision probability and normalized throughput of the
// state-dependent-rate model with aligned backoff counters. Durations enter
// in units of slots (microseconds / sigma).
GammaTheta performance_zero_delay(const AttemptRates& rates, int n, const PhyTiming& timing);

// --- Tagged-node chain embedded at the node's own transmissions.

// States (stage, attackers-in-last-own-cycle): (0, 1) plus (s, n_a) for
// n_a >= 2. attackers == 1 forces stage == 0 (the node just succeeded).
class TaggedLayout {
  public:
    TaggedLayout(int retry_limit, int n) : K_(retry_limit), n_(n) {}
    int size() const { return 1 + (K_ + 1) * (n_ - 1); }
    int index(int stage, int attackers) const {
        return attackers == 1 ? 0 : 1 + stage * (n_ - 1) + (attackers - 2);
    }
    std::pair<int, int> state(int index) const {
        if (index == 0) {
            return {0, 1};
        }
        int r = index - 1;
        return {r / (n_ - 1), 2 + r % (n_ - 1)};
    }
    int retry_limit() const { return K_; }
    int nodes() const { return n_; }

  private:
    int K_;
    int n_;
};

// Probability that the tagged node's first backoff segment in a cycle
// starting at (stage, attackers) is cut short by another node's activity.
double interruption_probability(int stage, int attackers, const AttemptRates& rates,
                                const BackoffSchedule& schedule, int n);

// Mean residual backoff left at the first interruption (0 when the node is
// not interrupted), for a cycle starting at (stage, attackers).
double residual_backoff_mean(int stage, int attackers, const AttemptRates& rates,
                             const BackoffSchedule& schedule, int n);

// Mean backoff counted in the first transmission cycle of a backoff cycle
// starting at (stage, attackers): the post-success mean for (0, 1), the
// post-collision mean otherwise.
double first_segment_backoff_mean(int stage, int attackers, const AttemptRates& rates,
                                  const BackoffSchedule& schedule, int n);

// Auxiliary chain embedded at every transmission cycle, tracking the tagged
// node's (stage, attackers, residual). residual == 0 marks the tagged node's
// own transmissions; the tagged chain is this chain watched on those states.
struct AuxChain {
    struct State {
        int stage;
        int attackers;
        int residual;
    };
    std::vector<State> states;
    Eigen::SparseMatrix<double, Eigen::RowMajor> transitions;
    int n = 0;
    int index(int stage, int attackers, int residual) const;

  private:
    friend AuxChain aux_transition_matrix(const AttemptRates&, const BackoffSchedule&, int);
    std::vector<int> stage_offsets_;
    int zero_block_ = 0;
};

AuxChain aux_transition_matrix(const AttemptRates& rates, const BackoffSchedule& schedule, int n);

// Stationary distribution of the tagged chain, obtained from the auxiliary
// chain's stationary distribution restricted to residual == 0 states and
// renormalized. Indexed by TaggedLayout.
Eigen::VectorXd tagged_stationary(const AuxChain& aux, const BackoffSchedule& schedule,
                                  double tol = 1e-10);

// First-return transition matrix of the tagged chain, computed directly by
// absorbing the interruption walk (no auxiliary matrix is materialized).
// Indexed by TaggedLayout.
Eigen::MatrixXd tagged_cycle_matrix(const AttemptRates& rates, const BackoffSchedule& schedule,
                                    int n);

// One sweep of the attempt-rate fixed point given the tagged stationary
// distribution psi. When no interruption is possible anywhere the
// post-interruption rate is pinned to 1 and interruption_possible cleared.
struct RateUpdate {
    AttemptRates rates;
    bool interruption_possible = true;
};
RateUpdate rate_update(const Eigen::VectorXd& psi, const AttemptRates& rates,
                       const BackoffSchedule& schedule, int n);

struct RateSolve {
    AttemptRates rates;
    Eigen::VectorXd psi;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

// Successive substitution on (beta_d, beta_c), damped on oscillation, until
// the update drops below tol in max norm.
RateSolve solve_rates_zero_delay(const BackoffSchedule& schedule, int n, double tol = 1e-8,
                                 int max_iter = 1000,
                                 std::optional<std::pair<double, double>> initial = std::nullopt);

PerformanceReport analyze_zero_delay(const BackoffSchedule& schedule, int n,
                                     const PhyTiming& timing);

}  // namespace csmakit

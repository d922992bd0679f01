#pragma once

#include <Eigen/Dense>
#include <span>

#include "csmakit/rates.hpp"

namespace csmakit {

// Chain over (attackers in the last cycle, whether node 1 attempted),
// embedded at cycle starts with aligned counters (m = 0). States ordered
// (1,1)..(n,1), (1,0)..(n-1,0); node 1 silent implies fewer than n attackers,
// so there are 2n - 1 states.
class IdentityLayout {
  public:
    explicit IdentityLayout(int n) : n_(n) {}
    int size() const { return 2 * n_ - 1; }
    int index(int attackers, bool node1_attacked) const {
        return node1_attacked ? attackers - 1 : n_ + attackers - 1;
    }
    std::pair<int, bool> state(int index) const {
        return index < n_ ? std::pair<int, bool>{index + 1, true}
                          : std::pair<int, bool>{index - n_ + 1, false};
    }
    int nodes() const { return n_; }

  private:
    int n_;
};

Eigen::MatrixXd identity_chain(const AttemptRates& rates, int n);

// Expected number of node-1 successes within a frame of `frame_len` cycles,
// per starting state (IdentityLayout order).
Eigen::VectorXd expected_success_counts(const AttemptRates& rates, int n, int frame_len);

// Jain index over per-node frame throughputs; frames start right after a
// node-1 success. Throws std::domain_error when every node's expected frame
// success count is zero.
double jain_index(const AttemptRates& rates, int n, int frame_len);

// (sum x)^2 / (n sum x^2); 1 iff all entries equal.
double jain_index_from_values(std::span<const double> values);

struct SuccessRun {
    double repeat_prob = 0.0;     // r_11
    double mean_run_length = 1.0; // EU_1 = 1 / (1 - r_11)
    bool capped = false;          // r_11 within 1e-9 of 1; length capped at 1e9
};

SuccessRun success_run_zero_delay(const AttemptRates& rates, int n);

// n = 2 with transmitter-to-transmitter delay of m slots.
SuccessRun success_run_delay(const AttemptRates& rates, int m);

}  // namespace csmakit

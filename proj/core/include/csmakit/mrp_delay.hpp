#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>

#include "csmakit/mrp_zero.hpp"
#include "csmakit/rates.hpp"
#include "csmakit/schedule.hpp"
#include "csmakit/timing.hpp"

namespace csmakit {

// Relative timing of the tagged node's backoff start at a backoff-cycle
// boundary (n = 2): aligned after its own success, aligned after a collision
// (shift 0), deferred by k slots (shift +k), or leading the peer by k slots
// (shift -k).
struct RelMisalign {
    bool success = false;
    int shift = 0;

    static RelMisalign own_success() { return {true, 0}; }
    static RelMisalign aligned_collision() { return {false, 0}; }
    static RelMisalign shifted(int k) { return {false, k}; }
    bool operator==(const RelMisalign&) const = default;
};

// System-level chain over the misalignment at cycle starts, states ordered
// [success-aligned, collision-aligned, 1, ..., m]; (m+2) x (m+2).
Eigen::MatrixXd misalign_transition_matrix(const AttemptRates& rates, int m);

// Collision probability and normalized throughput for n = 2 with a
// transmitter-to-transmitter delay of m slots. Durations come from timing in
// exact microseconds (converted to slots), so fractional delay/slot ratios
// affect throughput even though the chain only sees the integer m.
GammaTheta performance_delay(const AttemptRates& rates, int m, const PhyTiming& timing);

// Outcome distribution of the tagged node's backoff completion after
// resuming a residual of b slots following an interruption (the peer then
// attempts at its post-success rate). Entries ordered
// [own-success, aligned-collision, +1..+m, -1..-m]; sums to 1.
Eigen::VectorXd residual_outcome_distribution(int residual, int m, double beta_after_success);

// Tagged-node chain embedded at the node's own transmissions, states
// (stage, x) with x = own-success only at stage 0. Ordered stage-major with
// x minor as [own-success, aligned-collision, +1..+m, -1..-m].
class DelayTaggedLayout {
  public:
    DelayTaggedLayout(int retry_limit, int m) : K_(retry_limit), m_(m) {}
    int size() const { return 1 + (K_ + 1) * (2 * m_ + 1); }
    int index(int stage, RelMisalign x) const {
        if (x.success) {
            return 0;
        }
        int off = x.shift > 0 ? x.shift : (x.shift < 0 ? m_ - x.shift : 0);
        return 1 + stage * (2 * m_ + 1) + off;
    }
    std::pair<int, RelMisalign> state(int index) const {
        if (index == 0) {
            return {0, RelMisalign::own_success()};
        }
        int r = index - 1;
        int stage = r / (2 * m_ + 1);
        int off = r % (2 * m_ + 1);
        int shift = off == 0 ? 0 : (off <= m_ ? off : -(off - m_));
        return {stage, RelMisalign{false, shift}};
    }
    int retry_limit() const { return K_; }
    int max_shift() const { return m_; }

  private:
    int K_;
    int m_;
};

Eigen::MatrixXd tagged_transition_matrix_delay(const AttemptRates& rates,
                                               const BackoffSchedule& schedule, int m);

double interruption_probability_delay(int stage, RelMisalign x, const AttemptRates& rates,
                                      const BackoffSchedule& schedule, int m);

struct SegmentMeans {
    double residual_mean;      // expected residual left at the first interruption
    double first_segment_mean; // expected backoff counted in the first segment
};
SegmentMeans segment_means_delay(int stage, RelMisalign x, const AttemptRates& rates,
                                 const BackoffSchedule& schedule, int m);

RateUpdate rate_update_delay(const Eigen::VectorXd& psi, const AttemptRates& rates,
                             const BackoffSchedule& schedule, int m);

RateSolve solve_rates_delay(const BackoffSchedule& schedule, int m, double tol = 1e-8,
                            int max_iter = 1000,
                            std::optional<std::pair<double, double>> initial = std::nullopt);

// m is taken from timing.prop_slots(); throughput uses the exact
// microsecond durations.
PerformanceReport analyze_delay(const BackoffSchedule& schedule, const PhyTiming& timing);

}  // namespace csmakit

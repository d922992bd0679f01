#pragma once

#include <optional>
#include <vector>

namespace csmakit {

// Per-stage contention windows of a backoff schedule. Stage k draws its
// backoff uniformly from {1, ..., window(k)}, so the stage mean is
// (1 + window(k)) / 2. retry_limit() is the highest stage index; a collision
// in the last stage wraps the stage back to 0 (packet discard).
class BackoffSchedule {
  public:
    struct ExponentialParams {
        int min_exponent;
        int multiplier;
        int max_exponent;
    };

    explicit BackoffSchedule(std::vector<int> windows);

    // Windows given through their means b_k; requires 2*b_k - 1 to be a
    // positive integer (uniform support {1..2b-1}).
    static BackoffSchedule from_mean_backoffs(const std::vector<double>& means);

    // window(k) = min(multiplier^(min_exponent + k), multiplier^max_exponent),
    // k = 0..retry_limit.
    static BackoffSchedule exponential(int min_exponent, int multiplier, int max_exponent,
                                       int retry_limit);

    // IEEE 802.11b defaults: windows [32, 64, ..., 1024, 1024].
    static BackoffSchedule default_80211b() { return exponential(5, 2, 10, 6); }

    int retry_limit() const { return static_cast<int>(windows_.size()) - 1; }
    int stage_count() const { return static_cast<int>(windows_.size()); }
    int window(int stage) const;
    double mean_backoff(int stage) const { return (1.0 + window(stage)) / 2.0; }
    const std::vector<int>& windows() const { return windows_; }
    // Window of the final stage; attempt rates of the tagged-node fixed point
    // live in [1 / last_window(), 1].
    int last_window() const { return windows_.back(); }
    int max_window() const;
    bool nondecreasing() const;
    const std::optional<ExponentialParams>& derivation() const { return derivation_; }

  private:
    std::vector<int> windows_;
    std::optional<ExponentialParams> derivation_;
};

}  // namespace csmakit

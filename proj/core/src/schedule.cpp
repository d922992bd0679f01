#include "csmakit/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace csmakit {

BackoffSchedule::BackoffSchedule(std::vector<int> windows) : windows_(std::move(windows)) {
    if (windows_.empty()) {
        throw std::invalid_argument("backoff schedule needs at least one window");
    }
    for (std::size_t k = 0; k < windows_.size(); ++k) {
        if (windows_[k] < 1) {
            throw std::invalid_argument("contention window W_" + std::to_string(k) +
                                        " must be >= 1");
        }
    }
}

BackoffSchedule BackoffSchedule::from_mean_backoffs(const std::vector<double>& means) {
    std::vector<int> windows;
    windows.reserve(means.size());
    for (std::size_t k = 0; k < means.size(); ++k) {
        double w = 2.0 * means[k] - 1.0;
        double rounded = std::round(w);
        if (w < 1.0 - 1e-9 || std::abs(w - rounded) > 1e-9) {
            throw std::invalid_argument("mean backoff b_" + std::to_string(k) +
                                        " does not correspond to an integer window");
        }
        windows.push_back(static_cast<int>(rounded));
    }
    return BackoffSchedule(std::move(windows));
}

BackoffSchedule BackoffSchedule::exponential(int min_exponent, int multiplier, int max_exponent,
                                             int retry_limit) {
    if (min_exponent < 0 || max_exponent < min_exponent || multiplier < 2 || retry_limit < 0) {
        throw std::invalid_argument("invalid exponential schedule parameters");
    }
    long long cap = 1;
    for (int i = 0; i < max_exponent; ++i) {
        cap *= multiplier;
        if (cap > (1LL << 30)) {
            throw std::invalid_argument("maximum contention window overflows");
        }
    }
    std::vector<int> windows;
    windows.reserve(static_cast<std::size_t>(retry_limit) + 1);
    for (int k = 0; k <= retry_limit; ++k) {
        long long w = 1;
        int e = min_exponent + k;
        for (int i = 0; i < e && w < cap; ++i) {
            w *= multiplier;
        }
        windows.push_back(static_cast<int>(std::min(w, cap)));
    }
    BackoffSchedule schedule(std::move(windows));
    schedule.derivation_ = ExponentialParams{min_exponent, multiplier, max_exponent};
    return schedule;
}

int BackoffSchedule::window(int stage) const {
    if (stage < 0 || stage >= stage_count()) {
        throw std::out_of_range("backoff stage " + std::to_string(stage) + " out of range [0, " +
                                std::to_string(retry_limit()) + "]");
    }
    return windows_[static_cast<std::size_t>(stage)];
}

int BackoffSchedule::max_window() const {
    return *std::max_element(windows_.begin(), windows_.end());
}

bool BackoffSchedule::nondecreasing() const {
    return std::is_sorted(windows_.begin(), windows_.end());
}

}  // namespace csmakit

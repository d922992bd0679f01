#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace csmakit::detail {

inline std::vector<double> binom_row(int n) {
    std::vector<double> row(static_cast<std::size_t>(n) + 1, 1.0);
    for (int k = 1; k <= n; ++k) {
        row[static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k - 1)] * (n - k + 1) / k;
    }
    return row;
}

// Distribution of the number of simultaneous attempts in one slot from a
// two-group population: x nodes attempting w.p. bx each, y nodes w.p. bd.
inline std::vector<double> group_attempt_dist(int x, int y, double bx, double bd) {
    std::vector<double> px(static_cast<std::size_t>(x) + 1);
    std::vector<double> py(static_cast<std::size_t>(y) + 1);
    const std::vector<double> cx = binom_row(x);
    const std::vector<double> cy = binom_row(y);
    for (int i = 0; i <= x; ++i) {
        px[static_cast<std::size_t>(i)] =
            cx[static_cast<std::size_t>(i)] * std::pow(bx, i) * std::pow(1.0 - bx, x - i);
    }
    for (int j = 0; j <= y; ++j) {
        py[static_cast<std::size_t>(j)] =
            cy[static_cast<std::size_t>(j)] * std::pow(bd, j) * std::pow(1.0 - bd, y - j);
    }
    std::vector<double> dist(static_cast<std::size_t>(x + y) + 1, 0.0);
    for (int i = 0; i <= x; ++i) {
        for (int j = 0; j <= y; ++j) {
            dist[static_cast<std::size_t>(i + j)] +=
                px[static_cast<std::size_t>(i)] * py[static_cast<std::size_t>(j)];
        }
    }
    return dist;
}

}  // namespace csmakit::detail

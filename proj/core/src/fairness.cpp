#include "csmakit/fairness.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "csmakit/detail/attempt_mix.hpp"
#include "csmakit/markov.hpp"

namespace csmakit {

using detail::group_attempt_dist;

namespace {

void check_n(int n) {
    if (n < 2 || n > 64) {
        throw std::invalid_argument("fairness chain needs 2..64 nodes");
    }
}

constexpr double kRunCap = 1e9;

SuccessRun run_from_repeat_prob(double r11) {
    SuccessRun run;
    run.repeat_prob = r11;
    if (r11 > 1.0 - 1e-9) {
        run.capped = true;
        run.mean_run_length = kRunCap;
    } else {
        run.mean_run_length = 1.0 / (1.0 - r11);
    }
    return run;
}

SuccessRun absorb_success_run(const Eigen::MatrixXd& P, int own_success, int other_success) {
    // First-passage probability of hitting own_success before other_success,
    // starting from own_success.
    const int size = static_cast<int>(P.rows());
    std::vector<int> collision_states;
    for (int i = 0; i < size; ++i) {
        if (i != own_success && i != other_success) {
            collision_states.push_back(i);
        }
    }
    const int c = static_cast<int>(collision_states.size());
    double r11 = P(own_success, own_success);
    if (c > 0) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(c, c);
        Eigen::VectorXd b(c);
        for (int i = 0; i < c; ++i) {
            for (int j = 0; j < c; ++j) {
                A(i, j) -= P(collision_states[i], collision_states[j]);
            }
            b[i] = P(collision_states[i], own_success);
        }
        const Eigen::VectorXd r = A.partialPivLu().solve(b);
        if (!r.allFinite()) {
            throw std::runtime_error("success-run linear system is singular");
        }
        for (int i = 0; i < c; ++i) {
            r11 += P(own_success, collision_states[i]) * r[i];
        }
    }
    return run_from_repeat_prob(r11);
}

}  // namespace

Eigen::MatrixXd identity_chain(const AttemptRates& rates, int n) {
    check_n(n);
    const IdentityLayout layout(n);
    const double bd = rates.after_interruption;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(layout.size(), layout.size());
    for (int idx = 0; idx < layout.size(); ++idx) {
        const auto [na, tagged_attacked] = layout.state(idx);
        const double bx = attacker_rate(rates, na);
        const double denom =
            1.0 - std::pow(1.0 - bx, na) * std::pow(1.0 - bd, n - na);
        if (denom <= 0.0) {
            throw std::invalid_argument("all-zero attempt rates leave the channel silent");
        }
        // Node 1 is split out of its group; the rest attempt independently.
        const std::vector<double> dist =
            tagged_attacked ? group_attempt_dist(na - 1, n - na, bx, bd)
                            : group_attempt_dist(na, n - 1 - na, bx, bd);
        const double own_rate = tagged_attacked ? bx : bd;
        for (int nb = 0; nb <= n - 1; ++nb) {
            const double others = dist[static_cast<std::size_t>(nb)];
            if (nb >= 1) {
                P(idx, layout.index(nb, false)) += (1.0 - own_rate) * others / denom;
            }
            if (nb + 1 <= n) {
                P(idx, layout.index(nb + 1, true)) += own_rate * others / denom;
            }
        }
    }
    return P;
}

Eigen::VectorXd expected_success_counts(const AttemptRates& rates, int n, int frame_len) {
    if (frame_len < 1) {
        throw std::invalid_argument("frame length must be >= 1");
    }
    const IdentityLayout layout(n);
    const Eigen::MatrixXd P = identity_chain(rates, n);
    Eigen::VectorXd hit = Eigen::VectorXd::Zero(layout.size());
    hit[layout.index(1, true)] = 1.0;
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(layout.size());
    for (int step = 0; step < frame_len; ++step) {
        counts = P * (hit + counts);
    }
    return counts;
}

double jain_index_from_values(std::span<const double> values) {
    double sum = 0.0;
    double sq = 0.0;
    for (double v : values) {
        sum += v;
        sq += v * v;
    }
    if (sq <= 0.0) {
        throw std::domain_error("Jain index undefined for all-zero throughputs");
    }
    return sum * sum / (static_cast<double>(values.size()) * sq);
}

double jain_index(const AttemptRates& rates, int n, int frame_len) {
    const IdentityLayout layout(n);
    const Eigen::VectorXd counts = expected_success_counts(rates, n, frame_len);
    // Frames start after a node-1 success; by exchangeability every other
    // node's mean equals node 1's mean from the mirrored start state.
    const double own = counts[layout.index(1, true)];
    const double other = counts[layout.index(1, false)];
    std::vector<double> values(static_cast<std::size_t>(n), other);
    values[0] = own;
    return jain_index_from_values(values);
}

SuccessRun success_run_zero_delay(const AttemptRates& rates, int n) {
    check_n(n);
    const IdentityLayout layout(n);
    const Eigen::MatrixXd P = identity_chain(rates, n);
    return absorb_success_run(P, layout.index(1, true), layout.index(1, false));
}

SuccessRun success_run_delay(const AttemptRates& rates, int m) {
    if (m < 0) {
        throw std::invalid_argument("propagation delay in slots must be >= 0");
    }
    const double bs = rates.after_success;
    const double bd = rates.after_interruption;
    const double bc = rates.after_collision;
    const double ds = 1.0 - (1.0 - bd) * (1.0 - bs);
    const double dc = 1.0 - (1.0 - bc) * (1.0 - bc);
    if (ds <= 0.0 || dc <= 0.0) {
        throw std::invalid_argument("all-zero attempt rates leave the channel silent");
    }
    // States: 0 own success, 1 peer success, 2 aligned collision,
    // 2+k node-1 deferred by k, 2+m+k peer deferred by k.
    const int size = 2 * m + 3;
    const int own = 0;
    const int peer = 1;
    const int coll = 2;
    auto deferred_self = [&](int k) { return 2 + k; };
    auto deferred_peer = [&](int k) { return 2 + m + k; };
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(size, size);

    P(own, own) = bs * std::pow(1.0 - bd, m + 1) / ds;
    P(own, peer) = bd * std::pow(1.0 - bs, m + 1) / ds;
    P(own, coll) = bs * bd / ds;
    P(peer, peer) = P(own, own);
    P(peer, own) = P(own, peer);
    P(peer, coll) = P(own, coll);
    for (int k = 1; k <= m; ++k) {
        P(own, deferred_self(k)) = bs * std::pow(1.0 - bd, k) * bd / ds;
        P(own, deferred_peer(k)) = bd * std::pow(1.0 - bs, k) * bs / ds;
        P(peer, deferred_self(k)) = P(own, deferred_peer(k));
        P(peer, deferred_peer(k)) = P(own, deferred_self(k));
    }

    P(coll, own) = bc * std::pow(1.0 - bc, m + 1) / dc;
    P(coll, peer) = P(coll, own);
    P(coll, coll) = bc * bc / dc;
    for (int k = 1; k <= m; ++k) {
        P(coll, deferred_self(k)) = bc * bc * std::pow(1.0 - bc, k) / dc;
        P(coll, deferred_peer(k)) = P(coll, deferred_self(k));
    }

    for (int k = 1; k <= m; ++k) {
        const double silent_k = std::pow(1.0 - bc, k);
        // Renewal part: the early starter stays silent through the offset.
        for (int col = 0; col < size; ++col) {
            P(deferred_self(k), col) = silent_k * P(coll, col);
            P(deferred_peer(k), col) = silent_k * P(coll, col);
        }
        for (int j = 1; j <= k; ++j) {
            const double attempt_j = std::pow(1.0 - bc, j - 1) * bc;
            // Early starter attacks during the offset; the deferred node
            // either stays silent long enough (early starter succeeds) or
            // collides, becoming the new early starter.
            P(deferred_self(k), peer) += attempt_j * std::pow(1.0 - bc, j + m - k);
            P(deferred_peer(k), own) += attempt_j * std::pow(1.0 - bc, j + m - k);
            for (int kp = 1; kp <= m; ++kp) {
                if (j >= k - kp + 1) {
                    const double both = attempt_j * std::pow(1.0 - bc, j + kp - k - 1) * bc;
                    P(deferred_self(k), deferred_peer(kp)) += both;
                    P(deferred_peer(k), deferred_self(kp)) += both;
                }
            }
        }
    }
    return absorb_success_run(P, own, peer);
}

}  // namespace csmakit

#include "csmakit/mrp_delay.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "csmakit/markov.hpp"

namespace csmakit {

namespace {

double geo(double q, long long terms) { // sum_{u=1..terms} q^(u-1)
    if (terms <= 0) {
        return 0.0;
    }
    if (q >= 1.0) {
        return static_cast<double>(terms);
    }
    return (1.0 - std::pow(q, static_cast<double>(terms))) / (1.0 - q);
}

void check_m(int m) {
    if (m < 0) {
        throw std::invalid_argument("propagation delay in slots must be >= 0");
    }
}

// Backoff draws of at most this many slots cannot be interrupted; when the
// peer attempts at its w-th opportunity the tagged node has counted
// w + threshold - 1 slots. Deferral by k slots shortens the exposure,
// leading by k lengthens it.
int interrupt_threshold(RelMisalign x, int m) {
    return x.success ? m + 1 : m - x.shift + 1;
}

struct HTables {
    int m = 0;
    int max_residual = 0;
    int outcomes = 0;
    std::vector<double> h;       // h[(b-1)*outcomes + out]
    std::vector<double> ps_coll; // prefix of conv with the post-collision rate
    std::vector<double> ps_def;  // prefix of conv with the post-interruption rate

    double hval(int b, int out) const {
        return h[static_cast<std::size_t>(b - 1) * outcomes + out];
    }
    // (1/W) * sum over feasible first-interruption instants of the h-outcomes,
    // already accumulated: prefix(t, out) = sum_{tau<=t} conv(tau, out).
    double prefix(const std::vector<double>& ps, int t, int out) const {
        if (t < 1) {
            return 0.0;
        }
        return ps[static_cast<std::size_t>(t - 1) * outcomes + out];
    }
};

HTables build_h_tables(const AttemptRates& rates, int max_residual, int m) {
    HTables tables;
    tables.m = m;
    tables.max_residual = max_residual;
    tables.outcomes = 2 * m + 2;
    if (max_residual < 1) {
        return tables;
    }
    const double bs = rates.after_success;
    const double qs = 1.0 - bs;
    const int nout = tables.outcomes;
    tables.h.assign(static_cast<std::size_t>(max_residual) * nout, 0.0);
    std::vector<double> acc(static_cast<std::size_t>(nout), 0.0);
    for (int b = 1; b <= max_residual; ++b) {
        double* row = &tables.h[static_cast<std::size_t>(b - 1) * nout];
        if (b >= m + 2) {
            // Re-interruption chain: peer attempts at slot w <= b - m - 1.
            const double* prev = &tables.h[static_cast<std::size_t>(b - m - 2) * nout];
            for (int out = 0; out < nout; ++out) {
                acc[static_cast<std::size_t>(out)] =
                    qs * acc[static_cast<std::size_t>(out)] + bs * prev[out];
            }
        }
        row[0] = std::pow(qs, b + m) + acc[0];
        row[1] = std::pow(qs, b - 1) * bs + acc[1];
        for (int k = 1; k <= m; ++k) {
            row[1 + k] = std::pow(qs, b + k - 1) * bs + acc[static_cast<std::size_t>(1 + k)];
            double lead = b >= k + 1 ? std::pow(qs, b - k - 1) * bs : 0.0;
            row[1 + m + k] = lead + acc[static_cast<std::size_t>(1 + m + k)];
        }
    }

    auto build_prefix = [&](double beta) {
        std::vector<double> ps(static_cast<std::size_t>(max_residual) * nout, 0.0);
        std::vector<double> conv(static_cast<std::size_t>(nout), 0.0);
        const double q = 1.0 - beta;
        for (int t = 1; t <= max_residual; ++t) {
            const double* hrow = &tables.h[static_cast<std::size_t>(t - 1) * nout];
            double* psrow = &ps[static_cast<std::size_t>(t - 1) * nout];
            const double* prev = t > 1 ? &ps[static_cast<std::size_t>(t - 2) * nout] : nullptr;
            for (int out = 0; out < nout; ++out) {
                conv[static_cast<std::size_t>(out)] =
                    q * conv[static_cast<std::size_t>(out)] + beta * hrow[out];
                psrow[out] = (prev ? prev[out] : 0.0) + conv[static_cast<std::size_t>(out)];
            }
        }
        return ps;
    };
    tables.ps_coll = build_prefix(rates.after_collision);
    tables.ps_def = build_prefix(rates.after_interruption);
    return tables;
}

}  // namespace

Eigen::MatrixXd misalign_transition_matrix(const AttemptRates& rates, int m) {
    check_m(m);
    const double bs = rates.after_success;
    const double bd = rates.after_interruption;
    const double bc = rates.after_collision;
    const double ds = 1.0 - (1.0 - bd) * (1.0 - bs);
    const double dc = 1.0 - (1.0 - bc) * (1.0 - bc);
    if (ds <= 0.0 || dc <= 0.0) {
        throw std::invalid_argument("all-zero attempt rates leave the channel silent");
    }
    const int size = m + 2;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(size, size);
    P(0, 0) = (bs * std::pow(1.0 - bd, m + 1) + bd * std::pow(1.0 - bs, m + 1)) / ds;
    P(0, 1) = bs * bd / ds;
    for (int k = 1; k <= m; ++k) {
        P(0, 1 + k) =
            (bs * std::pow(1.0 - bd, k) * bd + bd * std::pow(1.0 - bs, k) * bs) / ds;
    }
    P(1, 0) = 2.0 * bc * std::pow(1.0 - bc, m + 1) / dc;
    P(1, 1) = bc * bc / dc;
    for (int k = 1; k <= m; ++k) {
        P(1, 1 + k) = 2.0 * bc * bc * std::pow(1.0 - bc, k) / dc;
    }
    for (int k = 1; k <= m; ++k) {
        const double silent_k = std::pow(1.0 - bc, k);
        for (int col = 0; col < size; ++col) {
            P(1 + k, col) = silent_k * P(1, col);
        }
        for (int j = 1; j <= k; ++j) {
            const double attempt_j = std::pow(1.0 - bc, j - 1) * bc;
            // Peer attack within the first k slots: the deferred node either
            // stays silent long enough for a success or collides again.
            P(1 + k, 0) += attempt_j * std::pow(1.0 - bc, j + m - k);
            for (int kp = 1; kp <= m; ++kp) {
                if (j >= k - kp + 1) {
                    P(1 + k, 1 + kp) += attempt_j * std::pow(1.0 - bc, j + kp - k - 1) * bc;
                }
            }
        }
    }
    return P;
}

GammaTheta performance_delay(const AttemptRates& rates, int m, const PhyTiming& timing) {
    check_m(m);
    timing.validate();
    const Eigen::MatrixXd P = misalign_transition_matrix(rates, m);
    const Eigen::VectorXd pi = stationary_distribution(P, 1e-10);

    const double bs = rates.after_success;
    const double bd = rates.after_interruption;
    const double bc = rates.after_collision;
    const double ds = 1.0 - (1.0 - bd) * (1.0 - bs);
    const double dc = 1.0 - (1.0 - bc) * (1.0 - bc);
    const double qd = 1.0 - std::pow(1.0 - bd, m);
    const double qs = 1.0 - std::pow(1.0 - bs, m);
    const double qc = 1.0 - std::pow(1.0 - bc, m);

    const double slot = timing.slot_us;
    const double ts = success_cycle_duration_us(timing, true) / slot;
    const double tc = collision_cycle_duration_us(timing, true) / slot;
    const double td = timing.data_us / slot;

    const int size = m + 2;
    Eigen::VectorXd ec(size), ea(size), ex(size), et(size);
    ec[0] = (bs * (1.0 - bd) * qd * 2.0 + bd * (1.0 - bs) * qs * 2.0 + 2.0 * bs * bd) / ds;
    ea[0] = (bs * (1.0 - bd) * (1.0 + qd) + bd * (1.0 - bs) * (1.0 + qs) + 2.0 * bs * bd) / ds;
    ec[1] = (2.0 * bc * (1.0 - bc) * qc * 2.0 + 2.0 * bc * bc) / dc;
    ea[1] = (2.0 * bc * (1.0 - bc) * (1.0 + qc) + 2.0 * bc * bc) / dc;
    ex[0] = (1.0 + (bs * bd + bs * (1.0 - bd) * qd + bd * (1.0 - bs) * qs) * tc +
             (bs * (1.0 - bd) * (1.0 - qd) + bd * (1.0 - bs) * (1.0 - qs)) * ts) /
            ds;
    et[0] = (bs * (1.0 - bd) * (1.0 - qd) + bd * (1.0 - bs) * (1.0 - qs)) * td / ds;
    ex[1] = (1.0 + (bc * bc + 2.0 * bc * (1.0 - bc) * qc) * tc +
             2.0 * bc * (1.0 - bc) * (1.0 - qc) * ts) /
            dc;
    et[1] = 2.0 * bc * (1.0 - bc) * (1.0 - qc) * td / dc;
    for (int k = 1; k <= m; ++k) {
        const double silent_k = std::pow(1.0 - bc, k);
        double c = silent_k * ec[1];
        double a = silent_k * ea[1];
        double x = silent_k * (k + ex[1]);
        double t = silent_k * et[1];
        for (int j = 1; j <= k; ++j) {
            const double attempt_j = std::pow(1.0 - bc, j - 1) * bc;
            const double pjk = 1.0 - std::pow(1.0 - bc, j + m - k);
            c += attempt_j * pjk * 2.0;
            a += attempt_j * (1.0 + pjk);
            x += attempt_j * (j + (1.0 - pjk) * ts + pjk * tc);
            t += attempt_j * (1.0 - pjk) * td;
        }
        ec[1 + k] = c;
        ea[1 + k] = a;
        ex[1 + k] = x;
        et[1 + k] = t;
    }
    return GammaTheta{pi.dot(ec) / pi.dot(ea), pi.dot(et) / pi.dot(ex)};
}

Eigen::VectorXd residual_outcome_distribution(int residual, int m, double beta_after_success) {
    check_m(m);
    if (residual < 1) {
        throw std::invalid_argument("residual backoff must be >= 1");
    }
    AttemptRates rates;
    rates.after_success = beta_after_success;
    rates.after_collision = 0.5; // unused by the h recursion
    rates.after_interruption = 0.5;
    const HTables tables = build_h_tables(rates, residual, m);
    Eigen::VectorXd h(tables.outcomes);
    for (int out = 0; out < tables.outcomes; ++out) {
        h[out] = tables.hval(residual, out);
    }
    return h;
}

double interruption_probability_delay(int stage, RelMisalign x, const AttemptRates& rates,
                                      const BackoffSchedule& schedule, int m) {
    check_m(m);
    const int W = schedule.window(stage);
    const double beta = x.success ? rates.after_interruption : rates.after_collision;
    const double q = 1.0 - beta;
    const int t0 = interrupt_threshold(x, m);
    const long long count = std::max(0LL, static_cast<long long>(W) - t0);
    return (static_cast<double>(count) - q * geo(q, count)) / W;
}

SegmentMeans segment_means_delay(int stage, RelMisalign x, const AttemptRates& rates,
                                 const BackoffSchedule& schedule, int m) {
    check_m(m);
    const int W = schedule.window(stage);
    const double beta = x.success ? rates.after_interruption : rates.after_collision;
    const double q = 1.0 - beta;
    const int t0 = interrupt_threshold(x, m);

    SegmentMeans means{0.0, 0.0};
    // Backoffs short enough to be immune to interruption count in full.
    const int immune = std::min(W, t0);
    double first_total = static_cast<double>(immune) * (immune + 1) / 2.0;

    double residual_total = 0.0;
    double geo_prefix = 0.0;   // sum_{w<=t} q^(w-1)
    double inner_lin = 0.0;    // beta * sum_{w<=t} q^(w-1) (t-w+1)
    double inner_count = 0.0;  // beta * sum_{w<=t} q^(w-1) (w + t0 - 1)
    double qp = 1.0;           // q^t, updated incrementally
    for (int t = 1; t <= W - t0; ++t) {
        geo_prefix += qp; // now sum over w = 1..t of q^(w-1)
        inner_lin += beta * geo_prefix;
        inner_count += qp * beta * (t + t0 - 1);
        qp *= q;
        residual_total += inner_lin;
        first_total += qp * (t + t0) + inner_count;
    }
    means.residual_mean = residual_total / W;
    means.first_segment_mean = first_total / W;
    return means;
}

Eigen::MatrixXd tagged_transition_matrix_delay(const AttemptRates& rates,
                                               const BackoffSchedule& schedule, int m) {
    check_m(m);
    const int K = schedule.retry_limit();
    const DelayTaggedLayout layout(K, m);
    const int wmax = schedule.max_window();
    const HTables tables = build_h_tables(rates, std::max(1, wmax - 1), m);
    const int nout = 2 * m + 2;

    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(layout.size(), layout.size());
    auto target_index = [&](int stage, int out) {
        if (out == 0) {
            return layout.index(0, RelMisalign::own_success());
        }
        const int next = (stage + 1) % (K + 1);
        const int shift = out <= 1 + m ? out - 1 : -(out - 1 - m);
        return layout.index(next, RelMisalign{false, shift});
    };

    for (int idx = 0; idx < layout.size(); ++idx) {
        const auto [s, x] = layout.state(idx);
        const int W = schedule.window(s);
        const double beta = x.success ? rates.after_interruption : rates.after_collision;
        const double q = 1.0 - beta;
        const double geo_w = geo(q, W);

        // Uninterrupted completions.
        if (x.success || x.shift == 0) {
            const int k = 0;
            Q(idx, target_index(s, 0)) += std::pow(q, m + 1 + k) * geo_w / W;
            for (int kp = 0; kp <= m; ++kp) {
                Q(idx, target_index(s, 1 + kp)) += beta * std::pow(q, kp) * geo_w / W;
            }
            for (int kp = 1; kp <= m; ++kp) {
                Q(idx, target_index(s, 1 + m + kp)) += beta * geo(q, W - kp) / W;
            }
        } else if (x.shift > 0) {
            const int k = x.shift;
            Q(idx, target_index(s, 0)) += std::pow(q, m + k + 1) * geo_w / W;
            for (int kp = 0; kp <= m; ++kp) {
                Q(idx, target_index(s, 1 + kp)) += beta * std::pow(q, k + kp) * geo_w / W;
            }
            for (int kp = 1; kp <= m; ++kp) {
                if (kp <= k) {
                    Q(idx, target_index(s, 1 + m + kp)) +=
                        beta * std::pow(q, k - kp) * geo_w / W;
                } else {
                    Q(idx, target_index(s, 1 + m + kp)) += beta * geo(q, W - (kp - k)) / W;
                }
            }
        } else {
            const int k = -x.shift;
            Q(idx, target_index(s, 0)) += std::pow(q, m - k + 1) * geo_w / W;
            for (int kp = 0; kp <= m; ++kp) {
                if (kp >= k) {
                    Q(idx, target_index(s, 1 + kp)) +=
                        beta * std::pow(q, kp - k) * geo_w / W;
                } else {
                    Q(idx, target_index(s, 1 + kp)) += beta * geo(q, W - (k - kp)) / W;
                }
            }
            for (int kp = 1; kp <= m; ++kp) {
                Q(idx, target_index(s, 1 + m + kp)) += beta * geo(q, W - k - kp) / W;
            }
        }

        // Interrupted first segments, resolved through the residual walk.
        const int t0 = interrupt_threshold(x, m);
        const int tmax = W - t0; // latest feasible first-interruption index
        if (tmax >= 1) {
            const std::vector<double>& ps = x.success ? tables.ps_def : tables.ps_coll;
            for (int out = 0; out < nout; ++out) {
                Q(idx, target_index(s, out)) += tables.prefix(ps, tmax, out) / W;
            }
        }
    }
    return Q;
}

RateUpdate rate_update_delay(const Eigen::VectorXd& psi, const AttemptRates& rates,
                             const BackoffSchedule& schedule, int m) {
    const DelayTaggedLayout layout(schedule.retry_limit(), m);
    if (psi.size() != layout.size()) {
        throw std::invalid_argument("psi has wrong dimension");
    }
    double interrupt_num = 0.0;
    double interrupt_den = 0.0;
    double collision_num = 0.0;
    double collision_den = 0.0;
    double mean_backoff = 0.0;
    for (int idx = 0; idx < layout.size(); ++idx) {
        const auto [s, x] = layout.state(idx);
        const double w = psi[idx];
        const double p_int = interruption_probability_delay(s, x, rates, schedule, m);
        const SegmentMeans means = segment_means_delay(s, x, rates, schedule, m);
        interrupt_num += w * p_int;
        interrupt_den += w * means.residual_mean;
        if (!x.success) {
            collision_num += w * (1.0 - p_int);
            collision_den += w * means.first_segment_mean;
        }
        mean_backoff += w * (schedule.window(s) + 1) / 2.0;
    }
    RateUpdate result;
    const RelMisalign own = RelMisalign::own_success();
    result.rates.after_success =
        (1.0 - interruption_probability_delay(0, own, rates, schedule, m)) /
        segment_means_delay(0, own, rates, schedule, m).first_segment_mean;
    if (interrupt_den > 0.0) {
        result.rates.after_interruption = interrupt_num / interrupt_den;
    } else {
        result.rates.after_interruption = 1.0;
        result.interruption_possible = false;
    }
    result.rates.after_collision = collision_den > 0.0 ? collision_num / collision_den : 1.0;
    result.rates.overall = 1.0 / mean_backoff;
    return result;
}

RateSolve solve_rates_delay(const BackoffSchedule& schedule, int m, double tol, int max_iter,
                            std::optional<std::pair<double, double>> initial) {
    check_m(m);
    const double lo = 1.0 / schedule.last_window();
    auto clamp_box = [&](double v) { return std::min(1.0, std::max(lo, v)); };
    double bd = clamp_box(initial ? initial->first : 0.5);
    double bc = clamp_box(initial ? initial->second : 0.5);

    RateSolve result;
    AttemptRates rates{bd, 0.0, bc, 0.0};
    const RelMisalign own = RelMisalign::own_success();
    rates.after_success =
        (1.0 - interruption_probability_delay(0, own, rates, schedule, m)) /
        segment_means_delay(0, own, rates, schedule, m).first_segment_mean;

    double damping = 1.0;
    double prev_step_d = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::MatrixXd Q = tagged_transition_matrix_delay(rates, schedule, m);
        const Eigen::VectorXd psi = stationary_distribution(Q, 1e-12);
        const RateUpdate update = rate_update_delay(psi, rates, schedule, m);

        double new_d = update.interruption_possible ? update.rates.after_interruption : bd;
        double new_c = update.rates.after_collision;
        const double step_d = new_d - bd;
        const double step_c = new_c - bc;
        if (it > 0 && step_d * prev_step_d < 0.0) {
            damping = 0.5;
        }
        prev_step_d = step_d;
        bd += damping * step_d;
        bc += damping * step_c;

        rates.after_interruption = bd;
        rates.after_collision = bc;
        rates.after_success = update.rates.after_success;
        rates.overall = update.rates.overall;

        result.residual = std::max(std::abs(step_d), std::abs(step_c));
        result.iterations = it + 1;
        result.psi = psi;
        if (result.residual <= tol) {
            result.converged = true;
            break;
        }
    }
    const Eigen::MatrixXd Q = tagged_transition_matrix_delay(rates, schedule, m);
    result.psi = stationary_distribution(Q, 1e-12);
    const RateUpdate final_update = rate_update_delay(result.psi, rates, schedule, m);
    rates.after_success = final_update.rates.after_success;
    rates.overall = final_update.rates.overall;
    result.rates = rates;
    return result;
}

PerformanceReport analyze_delay(const BackoffSchedule& schedule, const PhyTiming& timing) {
    timing.validate();
    const int m = timing.prop_slots();
    RateSolve solve = solve_rates_delay(schedule, m);
    if (!solve.converged) {
        throw std::runtime_error("attempt-rate fixed point did not converge (residual " +
                                 std::to_string(solve.residual) + ")");
    }
    const GammaTheta perf = performance_delay(solve.rates, m, timing);
    PerformanceReport report;
    report.collision_prob = perf.collision_prob;
    report.throughput = perf.throughput;
    report.rates = solve.rates;
    report.source = ResultSource::MrpAnalysis;
    return report;
}

}  // namespace csmakit

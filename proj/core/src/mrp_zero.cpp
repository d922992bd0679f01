#include "csmakit/mrp_zero.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "csmakit/detail/attempt_mix.hpp"
#include "csmakit/markov.hpp"

namespace csmakit {

using detail::group_attempt_dist;

namespace {

// Per-slot probability that none of the other n-1 nodes attempt during the
// first backoff segment of a cycle starting at attacker count `attackers`.
double peer_silent_prob(const AttemptRates& rates, int attackers, int n) {
    return std::pow(1.0 - rates.after_collision, attackers - 1) *
           std::pow(1.0 - rates.after_interruption, n - attackers);
}

double geometric_sum(double rho, long long terms) { // sum_{u=1..terms} rho^(u-1)
    if (terms <= 0) {
        return 0.0;
    }
    if (rho >= 1.0) {
        return static_cast<double>(terms);
    }
    return (1.0 - std::pow(rho, static_cast<double>(terms))) / (1.0 - rho);
}

void check_n(int n) {
    if (n < 2 || n > 64) {
        throw std::invalid_argument("attacker-count chain needs 2..64 nodes");
    }
}

}  // namespace

double joint_attempt_prob(int attackers_prev, int attackers_next, const AttemptRates& rates,
                          int n) {
    check_n(n);
    if (attackers_prev < 1 || attackers_prev > n || attackers_next < 0 || attackers_next > n) {
        throw std::invalid_argument("attacker counts out of range");
    }
    const double bx = attacker_rate(rates, attackers_prev);
    std::vector<double> dist =
        group_attempt_dist(attackers_prev, n - attackers_prev, bx, rates.after_interruption);
    return dist[static_cast<std::size_t>(attackers_next)];
}

Eigen::MatrixXd cycle_transition_matrix(const AttemptRates& rates, int n) {
    check_n(n);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (int na = 1; na <= n; ++na) {
        const double bx = attacker_rate(rates, na);
        std::vector<double> dist =
            group_attempt_dist(na, n - na, bx, rates.after_interruption);
        const double active = 1.0 - dist[0];
        if (active <= 0.0) {
            throw std::invalid_argument("all-zero attempt rates leave the channel silent");
        }
        for (int nb = 1; nb <= n; ++nb) {
            P(na - 1, nb - 1) = dist[static_cast<std::size_t>(nb)] / active;
        }
    }
    return P;
}

GammaTheta performance_zero_delay(const AttemptRates& rates, int n, const PhyTiming& timing) {
    timing.validate();
    const Eigen::MatrixXd P = cycle_transition_matrix(rates, n);
    const Eigen::VectorXd pi = stationary_distribution(P, 1e-10);

    const double slot = timing.slot_us;
    const double ts = success_cycle_duration_us(timing, false) / slot;
    const double tc = collision_cycle_duration_us(timing, false) / slot;
    const double td = timing.data_us / slot;

    double coll_num = 0.0;
    double att_den = 0.0;
    double data_num = 0.0;
    double len_den = 0.0;
    for (int na = 1; na <= n; ++na) {
        const double bx = attacker_rate(rates, na);
        std::vector<double> dist =
            group_attempt_dist(na, n - na, bx, rates.after_interruption);
        const double active = 1.0 - dist[0];
        double expected_collisions = 0.0;
        double expected_attempts = dist[1] / active;
        double collision_time = 0.0;
        for (int nb = 2; nb <= n; ++nb) {
            const double p = dist[static_cast<std::size_t>(nb)] / active;
            expected_collisions += p * nb;
            expected_attempts += p * nb;
            collision_time += dist[static_cast<std::size_t>(nb)] * tc;
        }
        const double w = pi[na - 1];
        coll_num += w * expected_collisions;
        att_den += w * expected_attempts;
        data_num += w * dist[1] * td / active;
        len_den += w * (1.0 + dist[1] * ts + collision_time) / active;
    }
    return GammaTheta{coll_num / att_den, data_num / len_den};
}

double interruption_probability(int stage, int attackers, const AttemptRates& rates,
                                const BackoffSchedule& schedule, int n) {
    const int W = schedule.window(stage);
    const double rho = peer_silent_prob(rates, attackers, n);
    return 1.0 - geometric_sum(rho, W) / W;
}

double residual_backoff_mean(int stage, int attackers, const AttemptRates& rates,
                             const BackoffSchedule& schedule, int n) {
    const int W = schedule.window(stage);
    const double rho = peer_silent_prob(rates, attackers, n);
    double total = 0.0;
    double geo = 0.0; // sum_{w<=l-1} rho^(w-1)
    double lin = 0.0; // sum_{w<=l-1} (l-w) rho^(w-1)
    double rp = 1.0;  // rho^(l-1)
    for (int l = 1; l <= W; ++l) {
        total += lin * (1.0 - rho);
        geo += rp;
        rp *= rho;
        lin += geo;
    }
    return total / W;
}

double first_segment_backoff_mean(int stage, int attackers, const AttemptRates& rates,
                                  const BackoffSchedule& schedule, int n) {
    const int W = schedule.window(stage);
    const double rho = peer_silent_prob(rates, attackers, n);
    double total = 0.0;
    double weighted = 0.0; // sum_{w<=l-1} w rho^(w-1)
    double rp = 1.0;       // rho^(l-1)
    for (int l = 1; l <= W; ++l) {
        total += l * rp + weighted * (1.0 - rho);
        weighted += l * rp;
        rp *= rho;
    }
    return total / W;
}

int AuxChain::index(int stage, int attackers, int residual) const {
    if (residual == 0) {
        return attackers == 1 ? 0 : 1 + stage * (n - 1) + (attackers - 2);
    }
    return stage_offsets_[static_cast<std::size_t>(stage)] + (residual - 1) * (n - 1) +
           (attackers - 1);
}

AuxChain aux_transition_matrix(const AttemptRates& rates, const BackoffSchedule& schedule,
                               int n) {
    check_n(n);
    const int K = schedule.retry_limit();
    AuxChain aux;
    aux.n = n;
    aux.zero_block_ = 1 + (K + 1) * (n - 1);
    aux.stage_offsets_.resize(static_cast<std::size_t>(K) + 1);
    int next = aux.zero_block_;
    for (int s = 0; s <= K; ++s) {
        aux.stage_offsets_[static_cast<std::size_t>(s)] = next;
        next += (schedule.window(s) - 1) * (n - 1);
    }
    const int total = next;

    aux.states.resize(static_cast<std::size_t>(total));
    aux.states[0] = {0, 1, 0};
    for (int s = 0; s <= K; ++s) {
        for (int na = 2; na <= n; ++na) {
            aux.states[static_cast<std::size_t>(aux.index(s, na, 0))] = {s, na, 0};
        }
        for (int b = 1; b <= schedule.window(s) - 1; ++b) {
            for (int na = 1; na <= n - 1; ++na) {
                aux.states[static_cast<std::size_t>(aux.index(s, na, b))] = {s, na, b};
            }
        }
    }

    std::vector<Eigen::Triplet<double>> triplets;
    const double bd = rates.after_interruption;
    const double bc = rates.after_collision;

    for (int s = 0; s <= K; ++s) {
        const int W = schedule.window(s);
        const int next_stage = (s + 1) % (K + 1);
        for (int na = 1; na <= n; ++na) {
            // States (s, na, 0) with na == 1 exist only at stage 0.
            if (na == 1 && s != 0) {
                continue;
            }
            const int row = aux.index(s, na, 0);
            const std::vector<double> dist = group_attempt_dist(na - 1, n - na, bc, bd);
            const double rho = dist[0];
            const double geo_avg = geometric_sum(rho, W) / W;

            triplets.emplace_back(row, aux.index(0, 1, 0), rho * geo_avg);
            for (int nb = 2; nb <= n; ++nb) {
                triplets.emplace_back(row, aux.index(next_stage, nb, 0),
                                      dist[static_cast<std::size_t>(nb - 1)] * geo_avg);
            }
            double tail = 0.0; // sum_{l=b+1..W} rho^(l-b-1) built from b = W-1 down
            for (int b = W - 1; b >= 1; --b) {
                tail = 1.0 + rho * tail;
                for (int nb = 1; nb <= n - 1; ++nb) {
                    triplets.emplace_back(row, aux.index(s, nb, b),
                                          dist[static_cast<std::size_t>(nb)] * tail / W);
                }
            }
        }

        for (int b = 1; b <= W - 1; ++b) {
            for (int na = 1; na <= n - 1; ++na) {
                const int row = aux.index(s, na, b);
                const double bx = attacker_rate(rates, na);
                const std::vector<double> dist = group_attempt_dist(na, n - 1 - na, bx, bd);
                const double rho = dist[0];
                const double rho_b1 = std::pow(rho, b - 1);

                triplets.emplace_back(row, aux.index(0, 1, 0), rho_b1 * rho);
                for (int nb = 2; nb <= n; ++nb) {
                    triplets.emplace_back(row, aux.index(next_stage, nb, 0),
                                          dist[static_cast<std::size_t>(nb - 1)] * rho_b1);
                }
                double power = 1.0; // rho^(b - b' - 1) for b' = b-1 down to 1
                for (int bp = b - 1; bp >= 1; --bp) {
                    for (int nb = 1; nb <= n - 1; ++nb) {
                        triplets.emplace_back(row, aux.index(s, nb, bp),
                                              dist[static_cast<std::size_t>(nb)] * power);
                    }
                    power *= rho;
                }
            }
        }
    }

    aux.transitions.resize(total, total);
    aux.transitions.setFromTriplets(triplets.begin(), triplets.end());
    return aux;
}

Eigen::VectorXd tagged_stationary(const AuxChain& aux, const BackoffSchedule& schedule,
                                  double tol) {
    Eigen::VectorXd phi;
    if (aux.transitions.rows() <= 4096) {
        phi = stationary_distribution(Eigen::MatrixXd(aux.transitions), tol);
    } else {
        phi = stationary_distribution(aux.transitions, tol);
    }
    const TaggedLayout layout(schedule.retry_limit(), aux.n);
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(layout.size());
    for (std::size_t i = 0; i < aux.states.size(); ++i) {
        const AuxChain::State& st = aux.states[i];
        if (st.residual == 0) {
            psi[layout.index(st.stage, st.attackers)] += phi[static_cast<Eigen::Index>(i)];
        }
    }
    return psi / psi.sum();
}

Eigen::MatrixXd tagged_cycle_matrix(const AttemptRates& rates, const BackoffSchedule& schedule,
                                    int n) {
    check_n(n);
    const int K = schedule.retry_limit();
    const TaggedLayout layout(K, n);
    const int wmax = schedule.max_window();
    const double bd = rates.after_interruption;
    const double bc = rates.after_collision;
    const int nout = n; // outcome 0: success; outcome t >= 1: collision with t others

    // Absorption distributions E(b, a): tagged node resumes a residual of b
    // slots after an interruption by a nodes; outcome of its eventual attempt.
    // Flattened as E[((b-1)*(n-1) + (a-1)) * nout + out].
    std::vector<double> E;
    if (wmax > 1) {
        E.assign(static_cast<std::size_t>(wmax - 1) * (n - 1) * nout, 0.0);
        std::vector<std::vector<double>> walk_dist(static_cast<std::size_t>(n - 1));
        std::vector<double> rho(static_cast<std::size_t>(n - 1));
        std::vector<double> rho_pow(static_cast<std::size_t>(n - 1), 1.0);
        for (int a = 1; a <= n - 1; ++a) {
            const double bx = attacker_rate(rates, a);
            walk_dist[static_cast<std::size_t>(a - 1)] =
                group_attempt_dist(a, n - 1 - a, bx, bd);
            rho[static_cast<std::size_t>(a - 1)] = walk_dist[static_cast<std::size_t>(a - 1)][0];
        }
        std::vector<double> acc(static_cast<std::size_t>(n - 1) * nout, 0.0);
        std::vector<double> mvec(static_cast<std::size_t>(n - 1) * nout, 0.0);
        for (int b = 1; b <= wmax - 1; ++b) {
            for (int a = 1; a <= n - 1; ++a) {
                const std::size_t ai = static_cast<std::size_t>(a - 1);
                const std::vector<double>& dist = walk_dist[ai];
                double* e = &E[(static_cast<std::size_t>(b - 1) * (n - 1) + ai) * nout];
                const double* ac = &acc[ai * nout];
                e[0] = rho_pow[ai] * rho[ai] + ac[0]; // rho^b
                for (int t = 1; t <= n - 1; ++t) {
                    e[t] = rho_pow[ai] * dist[static_cast<std::size_t>(t)] + ac[t];
                }
            }
            // Fold E(b, .) into the accumulators for the next residual.
            for (int a = 1; a <= n - 1; ++a) {
                const std::size_t ai = static_cast<std::size_t>(a - 1);
                const std::vector<double>& dist = walk_dist[ai];
                double* mv = &mvec[ai * nout];
                for (int out = 0; out < nout; ++out) {
                    mv[out] = 0.0;
                }
                for (int ap = 1; ap <= n - 1; ++ap) {
                    const double g = dist[static_cast<std::size_t>(ap)];
                    if (g == 0.0) {
                        continue;
                    }
                    const double* e =
                        &E[(static_cast<std::size_t>(b - 1) * (n - 1) + (ap - 1)) * nout];
                    for (int out = 0; out < nout; ++out) {
                        mv[out] += g * e[out];
                    }
                }
                double* ac = &acc[ai * nout];
                for (int out = 0; out < nout; ++out) {
                    ac[out] = mv[out] + rho[ai] * ac[out];
                }
                rho_pow[ai] *= rho[ai];
            }
        }
    }

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(layout.size(), layout.size());
    std::vector<double> inner(static_cast<std::size_t>(nout));
    std::vector<double> row(static_cast<std::size_t>(nout));
    std::vector<double> mseg; // M~(x): first-interruption group mix folded with E
    for (int na = 1; na <= n; ++na) {
        const std::vector<double> dist = group_attempt_dist(na - 1, n - na, bc, bd);
        const double rho = dist[0];
        if (wmax > 1) {
            mseg.assign(static_cast<std::size_t>(wmax) * nout, 0.0);
            for (int x = 1; x <= wmax - 1; ++x) {
                double* mv = &mseg[static_cast<std::size_t>(x) * nout];
                for (int ap = 1; ap <= n - 1; ++ap) {
                    const double g = dist[static_cast<std::size_t>(ap)];
                    if (g == 0.0) {
                        continue;
                    }
                    const double* e =
                        &E[(static_cast<std::size_t>(x - 1) * (n - 1) + (ap - 1)) * nout];
                    for (int out = 0; out < nout; ++out) {
                        mv[out] += g * e[out];
                    }
                }
            }
        }
        const int s_max = na == 1 ? 0 : K;
        for (int s = 0; s <= s_max; ++s) {
            const int W = schedule.window(s);
            const int next_stage = (s + 1) % (K + 1);
            std::fill(row.begin(), row.end(), 0.0);
            std::fill(inner.begin(), inner.end(), 0.0);
            double rp = 1.0; // rho^(l-1)
            for (int l = 1; l <= W; ++l) {
                row[0] += rp * rho + inner[0];
                for (int t = 1; t <= n - 1; ++t) {
                    row[static_cast<std::size_t>(t)] +=
                        rp * dist[static_cast<std::size_t>(t)] + inner[static_cast<std::size_t>(t)];
                }
                if (l < W) {
                    const double* mv = &mseg[static_cast<std::size_t>(l) * nout];
                    for (int out = 0; out < nout; ++out) {
                        inner[static_cast<std::size_t>(out)] =
                            rho * inner[static_cast<std::size_t>(out)] + mv[out];
                    }
                    rp *= rho;
                }
            }
            const int r = layout.index(s, na);
            T(r, layout.index(0, 1)) += row[0] / W;
            for (int t = 1; t <= n - 1; ++t) {
                T(r, layout.index(next_stage, t + 1)) += row[static_cast<std::size_t>(t)] / W;
            }
        }
    }
    return T;
}

RateUpdate rate_update(const Eigen::VectorXd& psi, const AttemptRates& rates,
                       const BackoffSchedule& schedule, int n) {
    check_n(n);
    const TaggedLayout layout(schedule.retry_limit(), n);
    if (psi.size() != layout.size()) {
        throw std::invalid_argument("psi has wrong dimension");
    }
    double interrupt_num = 0.0;
    double interrupt_den = 0.0;
    double collision_num = 0.0;
    double collision_den = 0.0;
    double mean_backoff = 0.0;
    for (int idx = 0; idx < layout.size(); ++idx) {
        const auto [s, na] = layout.state(idx);
        const double w = psi[idx];
        const double p_int = interruption_probability(s, na, rates, schedule, n);
        interrupt_num += w * p_int;
        interrupt_den += w * residual_backoff_mean(s, na, rates, schedule, n);
        if (!(s == 0 && na == 1)) {
            collision_num += w * (1.0 - p_int);
            collision_den += w * first_segment_backoff_mean(s, na, rates, schedule, n);
        }
        mean_backoff += w * (schedule.window(s) + 1) / 2.0;
    }
    RateUpdate result;
    result.rates.after_success =
        (1.0 - interruption_probability(0, 1, rates, schedule, n)) /
        first_segment_backoff_mean(0, 1, rates, schedule, n);
    if (interrupt_den > 0.0) {
        result.rates.after_interruption = interrupt_num / interrupt_den;
    } else {
        result.rates.after_interruption = 1.0; // no interruption is ever possible
        result.interruption_possible = false;
    }
    result.rates.after_collision =
        collision_den > 0.0 ? collision_num / collision_den : 1.0;
    result.rates.overall = 1.0 / mean_backoff;
    return result;
}

RateSolve solve_rates_zero_delay(const BackoffSchedule& schedule, int n, double tol, int max_iter,
                                 std::optional<std::pair<double, double>> initial) {
    check_n(n);
    const double lo = 1.0 / schedule.last_window();
    auto clamp_box = [&](double v) { return std::min(1.0, std::max(lo, v)); };
    double bd = clamp_box(initial ? initial->first : 0.5);
    double bc = clamp_box(initial ? initial->second : 0.5);

    RateSolve result;
    AttemptRates rates{bd, 0.0, bc, 0.0};
    rates.after_success =
        (1.0 - interruption_probability(0, 1, rates, schedule, n)) /
        first_segment_backoff_mean(0, 1, rates, schedule, n);

    double damping = 1.0;
    double prev_step_d = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::MatrixXd T = tagged_cycle_matrix(rates, schedule, n);
        const Eigen::VectorXd psi = stationary_distribution(T, 1e-12);
        const RateUpdate update = rate_update(psi, rates, schedule, n);

        double new_d = update.interruption_possible ? update.rates.after_interruption : bd;
        double new_c = update.rates.after_collision;
        const double step_d = new_d - bd;
        const double step_c = new_c - bc;
        if (it > 0 && step_d * prev_step_d < 0.0) {
            damping = 0.5; // oscillation: switch to averaged iterates
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
    // Refresh the dependent quantities at the final (beta_d, beta_c).
    const Eigen::MatrixXd T = tagged_cycle_matrix(rates, schedule, n);
    result.psi = stationary_distribution(T, 1e-12);
    const RateUpdate final_update = rate_update(result.psi, rates, schedule, n);
    rates.after_success = final_update.rates.after_success;
    rates.overall = final_update.rates.overall;
    result.rates = rates;
    return result;
}

PerformanceReport analyze_zero_delay(const BackoffSchedule& schedule, int n,
                                     const PhyTiming& timing) {
    RateSolve solve = solve_rates_zero_delay(schedule, n);
    if (!solve.converged) {
        throw std::runtime_error("attempt-rate fixed point did not converge (residual " +
                                 std::to_string(solve.residual) + ")");
    }
    const GammaTheta perf = performance_zero_delay(solve.rates, n, timing);
    PerformanceReport report;
    report.collision_prob = perf.collision_prob;
    report.throughput = perf.throughput;
    report.rates = solve.rates;
    report.source = ResultSource::MrpAnalysis;
    return report;
}

}  // namespace csmakit

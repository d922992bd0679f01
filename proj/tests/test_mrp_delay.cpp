#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "csmakit/markov.hpp"
#include "csmakit/mrp_delay.hpp"
#include "csmakit/mrp_zero.hpp"

using namespace csmakit;

namespace {

std::vector<RelMisalign> all_states(int m) {
    std::vector<RelMisalign> xs{RelMisalign::own_success(), RelMisalign::aligned_collision()};
    for (int k = 1; k <= m; ++k) {
        xs.push_back(RelMisalign::shifted(k));
        xs.push_back(RelMisalign::shifted(-k));
    }
    return xs;
}

int threshold_for(RelMisalign x, int m) { return x.success ? m + 1 : m - x.shift + 1; }

double enumerate_interrupt(int W, double q, int t0) {
    double total = 0.0;
    for (int l = t0 + 1; l <= W; ++l) {
        total += 1.0 - std::pow(q, l - t0);
    }
    return total / W;
}

double enumerate_residual(int W, double q, int t0) {
    double total = 0.0;
    for (int l = t0 + 1; l <= W; ++l) {
        for (int w = 1; w <= l - t0; ++w) {
            total += std::pow(q, w - 1) * (1.0 - q) * (l - t0 - w + 1);
        }
    }
    return total / W;
}

double enumerate_first_segment(int W, double q, int t0) {
    double total = 0.0;
    for (int l = 1; l <= W; ++l) {
        if (l <= t0) {
            total += l;
            continue;
        }
        total += std::pow(q, l - t0) * l;
        for (int w = 1; w <= l - t0; ++w) {
            total += std::pow(q, w - 1) * (1.0 - q) * (w + t0 - 1);
        }
    }
    return total / W;
}

// Literal sum of the uninterrupted-completion probabilities out of (s, x).
double enumerate_no_interrupt_mass(int W, RelMisalign x, int m, double beta) {
    const double q = 1.0 - beta;
    double total = 0.0;
    if (x.success || x.shift == 0) {
        for (int l = 1; l <= W; ++l) {
            total += std::pow(q, l + m); // peer silent through l + m: success
            for (int k = 0; k <= m; ++k) {
                total += std::pow(q, l + k - 1) * beta; // peer attacks l + k
            }
            for (int k = 1; k <= m; ++k) {
                if (l >= k + 1) {
                    total += std::pow(q, l - k - 1) * beta; // peer attacked l - k
                }
            }
        }
    } else if (x.shift > 0) {
        const int k = x.shift;
        for (int l = 1; l <= W; ++l) {
            total += std::pow(q, l + m + k);
            for (int kp = 0; kp <= m; ++kp) {
                total += std::pow(q, l + k + kp - 1) * beta;
            }
            for (int kp = 1; kp <= m; ++kp) {
                if (l >= kp - k + 1) {
                    total += std::pow(q, l + k - kp - 1) * beta;
                }
            }
        }
    } else {
        const int k = -x.shift;
        for (int l = 1; l <= W; ++l) {
            total += std::pow(q, l + m - k);
            for (int kp = 0; kp <= m; ++kp) {
                if (l >= k - kp + 1) {
                    total += std::pow(q, l + kp - k - 1) * beta;
                }
            }
            for (int kp = 1; kp <= m; ++kp) {
                if (l >= k + kp + 1) {
                    total += std::pow(q, l - k - kp - 1) * beta;
                }
            }
        }
    }
    return total / W;
}

}  // namespace

TEST_CASE("misalignment chain rows are stochastic") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 30; ++trial) {
        const AttemptRates rates{u(rng), u(rng), u(rng), 0.0};
        const int m = static_cast<int>(rng() % 12);
        require_row_stochastic(misalign_transition_matrix(rates, m), 1e-12);
    }
}

TEST_CASE("misalignment chain corner cases") {
    // Certain first-slot attempts by both sides collide immediately.
    AttemptRates eager{1.0, 1.0, 0.5, 0.0};
    const Eigen::MatrixXd P = misalign_transition_matrix(eager, 3);
    CHECK(P(0, 1) == doctest::Approx(1.0));

    // m = 0 collapses to the two-state chain.
    const AttemptRates rates{0.2, 0.7, 0.4, 0.0};
    const Eigen::MatrixXd P0 = misalign_transition_matrix(rates, 0);
    const double ds = 1.0 - (1.0 - rates.after_interruption) * (1.0 - rates.after_success);
    const double expect =
        (rates.after_success * (1.0 - rates.after_interruption) +
         rates.after_interruption * (1.0 - rates.after_success)) /
        ds;
    CHECK(P0(0, 0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(P0(0, 1) == doctest::Approx(1.0 - expect).epsilon(1e-12));

    // A deferred state reaches aligned-collision only through the silent prefix.
    const Eigen::MatrixXd P5 = misalign_transition_matrix(rates, 5);
    for (int k = 1; k <= 5; ++k) {
        CHECK(P5(1 + k, 1) ==
              doctest::Approx(std::pow(1.0 - rates.after_collision, k) * P5(1, 1))
                  .epsilon(1e-12));
    }
}

TEST_CASE("delay performance reduces to the aligned analysis at m = 0") {
    PhyTiming timing; // zero propagation delay
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 20; ++trial) {
        const AttemptRates rates{u(rng), u(rng), u(rng), 0.0};
        const GammaTheta zero = performance_zero_delay(rates, 2, timing);
        const GammaTheta delay = performance_delay(rates, 0, timing);
        CHECK(delay.collision_prob == doctest::Approx(zero.collision_prob).epsilon(1e-12));
        CHECK(delay.throughput == doctest::Approx(zero.throughput).epsilon(1e-12));
    }
}

TEST_CASE("eager colliders keep colliding") {
    PhyTiming timing;
    timing.prop_delay_us = 3 * timing.slot_us;
    timing.rx_prop_delay_us = timing.prop_delay_us;
    const AttemptRates rates = AttemptRates::uniform(1.0);
    const GammaTheta perf = performance_delay(rates, 3, timing);
    CHECK(perf.collision_prob == doctest::Approx(1.0));
    CHECK(perf.throughput == doctest::Approx(0.0));
}

TEST_CASE("residual outcome distribution sums to one") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 40; ++trial) {
        const int m = static_cast<int>(rng() % 8);
        const int b = 1 + static_cast<int>(rng() % 50);
        const Eigen::VectorXd h = residual_outcome_distribution(b, m, u(rng));
        CHECK(h.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(h.minCoeff() >= 0.0);
    }
}

TEST_CASE("residual outcome base cases") {
    // Silent peer: the resumed backoff always completes successfully.
    for (int b : {1, 3, 10}) {
        const Eigen::VectorXd h = residual_outcome_distribution(b, 2, 0.0);
        CHECK(h[0] == doctest::Approx(1.0));
    }
    // b = 1, m = 0: the peer either stays silent or joins the same slot.
    const double bs = 0.37;
    const Eigen::VectorXd h = residual_outcome_distribution(1, 0, bs);
    CHECK(h[0] == doctest::Approx(1.0 - bs).epsilon(1e-12));
    CHECK(h[1] == doctest::Approx(bs).epsilon(1e-12));
}

TEST_CASE("delay interruption probability and segment means against enumeration") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 40; ++trial) {
        const AttemptRates rates{u(rng), u(rng), u(rng), 0.0};
        const int m = static_cast<int>(rng() % 6);
        const int W = 1 + static_cast<int>(rng() % 40);
        const BackoffSchedule schedule(std::vector<int>{W});
        for (const RelMisalign& x : all_states(m)) {
            const double beta = x.success ? rates.after_interruption : rates.after_collision;
            const double q = 1.0 - beta;
            const int t0 = threshold_for(x, m);
            CHECK(interruption_probability_delay(0, x, rates, schedule, m) ==
                  doctest::Approx(enumerate_interrupt(W, q, t0)).epsilon(1e-12));
            const SegmentMeans means = segment_means_delay(0, x, rates, schedule, m);
            CHECK(means.residual_mean ==
                  doctest::Approx(enumerate_residual(W, q, t0)).epsilon(1e-12));
            CHECK(means.first_segment_mean ==
                  doctest::Approx(enumerate_first_segment(W, q, t0)).epsilon(1e-12));
        }
    }
}

TEST_CASE("delay interruption probability edge behavior") {
    const AttemptRates rates{0.3, 0.6, 0.4, 0.0};
    const int m = 4;
    // Window too small to be interrupted after a success.
    const BackoffSchedule tiny(std::vector<int>{m + 1});
    CHECK(interruption_probability_delay(0, RelMisalign::own_success(), rates, tiny, m) == 0.0);
    CHECK(segment_means_delay(0, RelMisalign::own_success(), rates, tiny, m)
              .first_segment_mean == doctest::Approx((m + 2) / 2.0));

    // m = 0 aligned-collision state matches the two-node aligned formula.
    const BackoffSchedule w16(std::vector<int>{16});
    CHECK(interruption_probability_delay(1 - 1, RelMisalign::aligned_collision(), rates, w16,
                                         0) ==
          doctest::Approx(interruption_probability(0, 2, rates, w16, 2)).epsilon(1e-12));

    // Deferral shortens the exposure: P_I(s,+k) >= P_I(s,-k).
    for (int k = 1; k <= m; ++k) {
        CHECK(interruption_probability_delay(0, RelMisalign::shifted(k), rates, w16, m) >=
              interruption_probability_delay(0, RelMisalign::shifted(-k), rates, w16, m));
    }

    // No peer attempts: the full backoff is counted.
    AttemptRates calm = rates;
    calm.after_interruption = 0.0;
    const BackoffSchedule w32(std::vector<int>{32});
    CHECK(segment_means_delay(0, RelMisalign::own_success(), calm, w32, m).first_segment_mean ==
          doctest::Approx((32 + 1) / 2.0));

    // Truncation bound for deferred states.
    for (int k = 0; k <= m; ++k) {
        const SegmentMeans means =
            segment_means_delay(0, RelMisalign::shifted(k), rates, w16, m);
        CHECK(means.first_segment_mean <= (16 + 1) / 2.0 + (m - k) + 1e-12);
    }
}

TEST_CASE("tagged delay chain rows are stochastic") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 12; ++trial) {
        const AttemptRates rates{u(rng), u(rng), u(rng), 0.0};
        const int m = static_cast<int>(rng() % 5);
        const BackoffSchedule schedule(std::vector<int>{4, 8, 16});
        const Eigen::MatrixXd Q = tagged_transition_matrix_delay(rates, schedule, m);
        require_row_stochastic(Q, 1e-10);
    }
}

TEST_CASE("interruption and completion partition every tagged cycle") {
    const AttemptRates rates{0.15, 0.55, 0.35, 0.0};
    const int m = 3;
    const BackoffSchedule schedule(std::vector<int>{8, 32});
    for (int s = 0; s < schedule.stage_count(); ++s) {
        for (const RelMisalign& x : all_states(m)) {
            if (x.success && s != 0) {
                continue;
            }
            const double beta = x.success ? rates.after_interruption : rates.after_collision;
            const double no_interrupt =
                enumerate_no_interrupt_mass(schedule.window(s), x, m, beta);
            const double p_int = interruption_probability_delay(s, x, rates, schedule, m);
            CHECK(no_interrupt + p_int == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("tagged delay chain reduces to the aligned tagged chain at m = 0") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 10; ++trial) {
        const AttemptRates rates{u(rng), u(rng), u(rng), 0.0};
        const BackoffSchedule schedule(std::vector<int>{2, 4, 8});
        const Eigen::MatrixXd Qd = tagged_transition_matrix_delay(rates, schedule, 0);
        const Eigen::MatrixXd Qz = tagged_cycle_matrix(rates, schedule, 2);
        REQUIRE(Qd.rows() == Qz.rows());
        CHECK((Qd - Qz).lpNorm<Eigen::Infinity>() < 1e-9);
    }
}

TEST_CASE("a silent peer keeps the successful node in the success state") {
    AttemptRates rates{0.0, 0.6, 0.4, 0.0};
    const BackoffSchedule schedule(std::vector<int>{8, 16});
    const Eigen::MatrixXd Q = tagged_transition_matrix_delay(rates, schedule, 2);
    CHECK(Q(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("delay rate solve matches the aligned solve at m = 0") {
    const BackoffSchedule schedule = BackoffSchedule::from_mean_backoffs({1.5, 32.5});
    const RateSolve aligned = solve_rates_zero_delay(schedule, 2, 1e-10, 2000);
    const RateSolve delayed = solve_rates_delay(schedule, 0, 1e-10, 2000);
    CHECK(delayed.converged);
    CHECK(std::abs(delayed.rates.after_interruption - aligned.rates.after_interruption) < 1e-9);
    CHECK(std::abs(delayed.rates.after_success - aligned.rates.after_success) < 1e-9);
    CHECK(std::abs(delayed.rates.after_collision - aligned.rates.after_collision) < 1e-9);
    CHECK(std::abs(delayed.rates.overall - aligned.rates.overall) < 1e-9);
}

TEST_CASE("delay analysis at m = 0 equals the aligned analysis") {
    PhyTiming timing;
    const BackoffSchedule schedule = BackoffSchedule::default_80211b();
    const PerformanceReport delayed = analyze_delay(schedule, timing);
    const PerformanceReport aligned = analyze_zero_delay(schedule, 2, timing);
    CHECK(std::abs(delayed.collision_prob - aligned.collision_prob) < 1e-9);
    CHECK(std::abs(delayed.throughput - aligned.throughput) < 1e-9);
}

TEST_CASE("delay rate solve converges inside the box") {
    const BackoffSchedule schedule = BackoffSchedule::default_80211b();
    const RateSolve solve = solve_rates_delay(schedule, 5);
    CHECK(solve.converged);
    const double lo = 1.0 / schedule.last_window();
    CHECK(solve.rates.after_interruption >= lo - 1e-12);
    CHECK(solve.rates.after_collision >= lo - 1e-12);
    CHECK(solve.rates.after_interruption <= 1.0 + 1e-12);
    CHECK(solve.rates.after_collision <= 1.0 + 1e-12);
    CHECK(solve.rates.after_success > solve.rates.after_interruption);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "csmakit/markov.hpp"
#include "csmakit/schedule.hpp"
#include "csmakit/timing.hpp"

using namespace csmakit;

TEST_CASE("exponential schedule matches the standard windows") {
    const BackoffSchedule schedule = BackoffSchedule::exponential(5, 2, 10, 6);
    CHECK(schedule.window(0) == 32);
    CHECK(schedule.window(6) == 1024);
    CHECK(schedule.windows() == std::vector<int>{32, 64, 128, 256, 512, 1024, 1024});
    CHECK(schedule.nondecreasing());
}

TEST_CASE("explicit windows are a plain lookup") {
    const BackoffSchedule schedule(std::vector<int>{2, 64});
    CHECK(schedule.window(1) == 64);
    CHECK(schedule.retry_limit() == 1);
    CHECK_THROWS_AS(schedule.window(2), std::out_of_range);
    CHECK_THROWS_AS(schedule.window(-1), std::out_of_range);
}

TEST_CASE("means map to windows via b = (1+W)/2") {
    const BackoffSchedule schedule = BackoffSchedule::from_mean_backoffs({1.5, 32.5});
    CHECK(schedule.windows() == std::vector<int>{2, 64});
    for (int k = 0; k < schedule.stage_count(); ++k) {
        CHECK(schedule.mean_backoff(k) == (1.0 + schedule.window(k)) / 2.0);
    }
    CHECK_THROWS_AS(BackoffSchedule::from_mean_backoffs({1.25}), std::invalid_argument);
    CHECK_THROWS_AS(BackoffSchedule::from_mean_backoffs({0.5}), std::invalid_argument);
}

TEST_CASE("mean backoffs are nondecreasing when windows are") {
    const BackoffSchedule schedule = BackoffSchedule::exponential(0, 3, 8, 7);
    double prev = 0.0;
    for (int k = 0; k < schedule.stage_count(); ++k) {
        CHECK(schedule.mean_backoff(k) >= prev);
        prev = schedule.mean_backoff(k);
    }
}

TEST_CASE("cycle durations add up") {
    PhyTiming t;
    t.data_us = 1.0;
    t.ack_us = t.phy_header_us = t.sifs_us = t.difs_us = t.turnaround_us = 0.0;
    t.eifs_us = 0.0;
    CHECK(success_cycle_duration_us(t, false) == doctest::Approx(1.0));
    CHECK(collision_cycle_duration_us(t, false) == doctest::Approx(1.0));

    t.rx_prop_delay_us = 200.0;
    CHECK(success_cycle_duration_us(t, true) == doctest::Approx(401.0));
    t.prop_delay_us = 100.0;
    CHECK(collision_cycle_duration_us(t, true) == doctest::Approx(101.0));
}

TEST_CASE("collision cycles are shorter whenever the extra success overhead is positive") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dur(0.0, 300.0);
    for (int trial = 0; trial < 200; ++trial) {
        PhyTiming t;
        t.data_us = dur(rng);
        t.ack_us = dur(rng);
        t.phy_header_us = dur(rng);
        t.sifs_us = dur(rng);
        t.difs_us = dur(rng);
        t.turnaround_us = dur(rng);
        t.eifs_us = 0.0;
        t.prop_delay_us = dur(rng);
        t.rx_prop_delay_us = dur(rng);
        const double margin = t.ack_us + t.phy_header_us + t.turnaround_us +
                              2.0 * t.rx_prop_delay_us - t.prop_delay_us;
        const double diff =
            success_cycle_duration_us(t, true) - collision_cycle_duration_us(t, true);
        CHECK(diff == doctest::Approx(margin).epsilon(1e-12));
    }
}

TEST_CASE("propagation slots use the integer part") {
    PhyTiming t;
    t.slot_us = 20.0;
    t.prop_delay_us = 140.0;
    CHECK(t.prop_slots() == 7);
    t.prop_delay_us = 139.0;
    CHECK(t.prop_slots() == 6);
    t.rx_prop_delay_us = 30.0;
    CHECK(t.rx_prop_slots() == doctest::Approx(1.5));
}

TEST_CASE("stationary distribution of symmetric two-state chains") {
    Eigen::MatrixXd P(2, 2);
    P << 0.5, 0.5, 0.5, 0.5;
    Eigen::VectorXd pi = stationary_distribution(P);
    CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-12));

    P << 0.0, 1.0, 1.0, 0.0;
    pi = stationary_distribution(P);
    CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("direct solve agrees with power iteration on random chains") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd P(5, 5);
        for (int r = 0; r < 5; ++r) {
            double sum = 0.0;
            for (int c = 0; c < 5; ++c) {
                P(r, c) = u(rng);
                sum += P(r, c);
            }
            P.row(r) /= sum;
        }
        const Eigen::VectorXd direct = stationary_distribution(P, 1e-12);
        CHECK(stationary_residual(P, direct) < 1e-10);

        // Independent route: plain power iteration.
        Eigen::VectorXd pi = Eigen::VectorXd::Constant(5, 0.2);
        for (int it = 0; it < 20000; ++it) {
            pi = P.transpose() * pi;
            pi /= pi.sum();
        }
        CHECK((pi - direct).lpNorm<Eigen::Infinity>() < 1e-9);
    }
}

TEST_CASE("stationary solver rejects bad input") {
    Eigen::MatrixXd P(2, 2);
    P << 0.7, 0.7, 0.5, 0.5;
    CHECK_THROWS_AS(stationary_distribution(P), std::invalid_argument);
    P << 0.5, 0.5, 0.5, -0.5;
    CHECK_THROWS_AS(stationary_distribution(P), std::invalid_argument);
}

TEST_CASE("stationary output is normalized and nonnegative") {
    Eigen::MatrixXd P(3, 3);
    P << 0.99, 0.01, 0.0, 0.01, 0.98, 0.01, 0.0, 0.01, 0.99;
    const Eigen::VectorXd pi = stationary_distribution(P, 1e-11);
    CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pi.minCoeff() >= 0.0);
    CHECK(stationary_residual(P, pi) < 1e-11);
}

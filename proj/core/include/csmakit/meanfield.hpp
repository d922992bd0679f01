#pragma once

#include <Eigen/Dense>
#include <vector>

#include "csmakit/schedule.hpp"

namespace csmakit {

// Population-limit dynamics of the stage-occupancy measure mu over stages
// 0..K, with per-stage attempt intensities p_k (p_k = 1/b_k for a schedule).
// The right-hand side conserves sum(mu).
Eigen::VectorXd mean_field_rhs(const Eigen::VectorXd& mu, const Eigen::VectorXd& p);

Eigen::VectorXd stage_attempt_intensities(const BackoffSchedule& schedule); // p_k = 1/b_k

struct MeanFieldStationary {
    Eigen::VectorXd mu;          // stationary stage occupancy
    double attempt_rate = 0.0;   // beta = p . mu
    double collision_prob = 0.0; // gamma = 1 - exp(-beta)
    double residual = 0.0;       // |gamma - (1 - exp(-beta(gamma)))|
};

// Stationary point: gamma solves gamma = 1 - exp(-beta(gamma)) with
// beta(gamma) = (sum gamma^k) / (sum gamma^k / p_k); mu_k ~ gamma^k / p_k.
MeanFieldStationary mean_field_stationary(const Eigen::VectorXd& p, double tol = 1e-12);

struct OdeTrajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<double> distance_to_stationary; // ||mu(t) - mu*||_2
};

// Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) integration of the
// mean-field dynamics from mu0 to t_end, recording accepted steps and the
// Euclidean distance to the stationary point. Throws std::runtime_error on
// step-size underflow.
OdeTrajectory integrate_mean_field(const Eigen::VectorXd& mu0, const Eigen::VectorXd& p,
                                   double t_end, double tol = 1e-9);

}  // namespace csmakit

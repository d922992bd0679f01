#pragma once

#include "csmakit/schedule.hpp"

namespace csmakit {

enum class CollisionModel { Binomial, Poisson };

// Renewal-reward attempt rate of a node seeing collision probability gamma:
// (sum_k gamma^k) / (sum_k gamma^k b_k), attempts per backoff slot.
double attempt_rate_given_collision_prob(double gamma, const BackoffSchedule& schedule);

// Collision probability of an attempt when each of the other n-1 nodes
// attempts independently with rate beta: 1 - (1-beta)^(n-1), or the
// large-population form 1 - exp(-(n-1) beta).
double collision_prob_given_attempt_rate(double beta, int n, CollisionModel model);

struct BianchiFixedPoint {
    double attempt_rate = 0.0;   // beta
    double collision_prob = 0.0; // gamma
    double residual = 0.0;       // |gamma - Gamma(G(gamma))|
    int iterations = 0;
    bool unique_guaranteed = true; // nondecreasing windows
};

// Solves gamma = Gamma(G(gamma)) by bisection on [0, 1]. Uniqueness is
// guaranteed for nondecreasing mean backoffs; otherwise unique_guaranteed is
// cleared and the returned root is the bisection one.
BianchiFixedPoint solve_bianchi_fixed_point(const BackoffSchedule& schedule, int n,
                                            double tol = 1e-12,
                                            CollisionModel model = CollisionModel::Binomial);

}  // namespace csmakit

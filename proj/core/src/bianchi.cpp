#include "csmakit/bianchi.hpp"

#include <cmath>
#include <stdexcept>

namespace csmakit {

double attempt_rate_given_collision_prob(double gamma, const BackoffSchedule& schedule) {
    if (gamma < 0.0 || gamma > 1.0) {
        throw std::invalid_argument("collision probability must lie in [0, 1]");
    }
    double num = 0.0;
    double den = 0.0;
    double gpow = 1.0;
    for (int k = 0; k < schedule.stage_count(); ++k) {
        num += gpow;
        den += gpow * schedule.mean_backoff(k);
        gpow *= gamma;
    }
    return num / den;
}

double collision_prob_given_attempt_rate(double beta, int n, CollisionModel model) {
    if (beta < 0.0 || beta > 1.0) {
        throw std::invalid_argument("attempt rate must lie in [0, 1]");
    }
    if (n < 2) {
        throw std::invalid_argument("need at least two nodes");
    }
    if (model == CollisionModel::Binomial) {
        return 1.0 - std::pow(1.0 - beta, n - 1);
    }
    return 1.0 - std::exp(-(n - 1) * beta);
}

BianchiFixedPoint solve_bianchi_fixed_point(const BackoffSchedule& schedule, int n, double tol,
                                            CollisionModel model) {
    auto f = [&](double gamma) {
        double beta = attempt_rate_given_collision_prob(gamma, schedule);
        return gamma - collision_prob_given_attempt_rate(beta, n, model);
    };
    double lo = 0.0;
    double hi = 1.0;
    // f(0) <= 0 and f(1) >= 0, so a root is bracketed.
    int iterations = 0;
    while (hi - lo > tol && iterations < 200) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) <= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        ++iterations;
    }
    BianchiFixedPoint result;
    result.collision_prob = 0.5 * (lo + hi);
    result.attempt_rate = attempt_rate_given_collision_prob(result.collision_prob, schedule);
    result.residual = std::abs(f(result.collision_prob));
    result.iterations = iterations;
    result.unique_guaranteed = schedule.nondecreasing();
    return result;
}

}  // namespace csmakit

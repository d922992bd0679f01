#include "csmakit/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace csmakit {

Eigen::VectorXd stage_attempt_intensities(const BackoffSchedule& schedule) {
    Eigen::VectorXd p(schedule.stage_count());
    for (int k = 0; k < schedule.stage_count(); ++k) {
        p[k] = 1.0 / schedule.mean_backoff(k);
    }
    return p;
}

Eigen::VectorXd mean_field_rhs(const Eigen::VectorXd& mu, const Eigen::VectorXd& p) {
    if (mu.size() != p.size() || mu.size() == 0) {
        throw std::invalid_argument("mu and p must have equal, nonzero length");
    }
    const Eigen::Index K = mu.size() - 1;
    const double rate = p.dot(mu);
    const double esc = std::exp(-rate);
    Eigen::VectorXd d(mu.size());
    d[0] = -mu[0] * p[0] + rate * esc + p[K] * mu[K] * (1.0 - esc);
    for (Eigen::Index i = 1; i <= K; ++i) {
        d[i] = -mu[i] * p[i] + mu[i - 1] * p[i - 1] * (1.0 - esc);
    }
    return d;
}

MeanFieldStationary mean_field_stationary(const Eigen::VectorXd& p, double tol) {
    if (p.size() == 0 || p.minCoeff() <= 0.0) {
        throw std::invalid_argument("attempt intensities must be positive");
    }
    auto beta_of_gamma = [&](double gamma) {
        double num = 0.0;
        double den = 0.0;
        double gpow = 1.0;
        for (Eigen::Index k = 0; k < p.size(); ++k) {
            num += gpow;
            den += gpow / p[k];
            gpow *= gamma;
        }
        return num / den;
    };
    auto f = [&](double gamma) { return gamma - (1.0 - std::exp(-beta_of_gamma(gamma))); };
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) <= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    MeanFieldStationary result;
    result.collision_prob = 0.5 * (lo + hi);
    result.attempt_rate = beta_of_gamma(result.collision_prob);
    result.residual = std::abs(f(result.collision_prob));
    Eigen::VectorXd mu(p.size());
    double gpow = 1.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        mu[k] = gpow / p[k];
        gpow *= result.collision_prob;
    }
    result.mu = mu / mu.sum();
    return result;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB5[7] = {35.0 / 384,      0.0,        500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784,  11.0 / 84,  0.0};
constexpr double kB4[7] = {5179.0 / 57600,  0.0,        7571.0 / 16695, 393.0 / 640,
                           -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

}  // namespace

OdeTrajectory integrate_mean_field(const Eigen::VectorXd& mu0, const Eigen::VectorXd& p,
                                   double t_end, double tol) {
    if (t_end < 0.0) {
        throw std::invalid_argument("t_end must be nonnegative");
    }
    const MeanFieldStationary fixed = mean_field_stationary(p);
    OdeTrajectory traj;
    Eigen::VectorXd y = mu0;
    double t = 0.0;
    traj.times.push_back(t);
    traj.states.push_back(y);
    traj.distance_to_stationary.push_back((y - fixed.mu).norm());

    double h = std::min(1.0, t_end > 0.0 ? t_end / 16.0 : 1.0);
    const double h_min = 1e-14 * std::max(1.0, t_end);
    std::array<Eigen::VectorXd, 7> k;
    while (t < t_end) {
        h = std::min(h, t_end - t);
        k[0] = mean_field_rhs(y, p);
        for (int stage = 1; stage < 7; ++stage) {
            Eigen::VectorXd yi = y;
            for (int j = 0; j < stage; ++j) {
                if (kA[stage][j] != 0.0) {
                    yi += h * kA[stage][j] * k[j];
                }
            }
            k[stage] = mean_field_rhs(yi, p);
        }
        Eigen::VectorXd y5 = y;
        Eigen::VectorXd err = Eigen::VectorXd::Zero(y.size());
        for (int j = 0; j < 7; ++j) {
            if (kB5[j] != 0.0) {
                y5 += h * kB5[j] * k[j];
            }
            double diff = kB5[j] - kB4[j];
            if (diff != 0.0) {
                err += h * diff * k[j];
            }
        }
        double err_norm = err.lpNorm<Eigen::Infinity>() / tol;
        if (err_norm <= 1.0) {
            t += h;
            y = y5;
            traj.times.push_back(t);
            traj.states.push_back(y);
            traj.distance_to_stationary.push_back((y - fixed.mu).norm());
        }
        double scale = err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
        h *= std::clamp(scale, 0.2, 5.0);
        if (h < h_min) {
            throw std::runtime_error("mean-field integrator step size underflow");
        }
    }
    return traj;
}

}  // namespace csmakit

#ifndef EBSIM_EPRB_ORACLE_HPP
#define EBSIM_EPRB_ORACLE_HPP

#include <algorithm>
#include <array>
#include <cmath>

#include "ebsim/core.hpp"

namespace ebsim {

/// Deterministic quadrature of the probabilistic EPRB model.
/// A window of exactly zero selects the W -> 0 limit.
struct OracleConfig {
    int grid_points = 4096;
    double window_ns = 2.0;
    double t0_ns = 2000.0;

    void validate() const {
        require(grid_points >= 64, "oracle: grid_points must be at least 64");
        require(window_ns >= 0.0, "oracle: window must be non-negative");
        require(t0_ns > 0.0, "oracle: T0 must be positive");
    }
};

/// P(x | alpha, xi) = [1 + x cos 2(alpha - xi)] / 2 for a particle polarized along xi.
inline double polarizer_prob(int x, Angle alpha, Angle xi) {
    return 0.5 * (1.0 + static_cast<double>(x) * std::cos(2.0 * (alpha.value - xi.value)));
}

/**
 * Probability that |t1 - t2| <= W for independent t1 ~ U[0, lambda1] and
 * t2 ~ U[0, lambda2]: area of the diagonal band inside the rectangle.
 */
inline double overlap_prob(double lambda1, double lambda2, double window) {
    const double a = std::min(lambda1, lambda2);
    const double b = std::max(lambda1, lambda2);
    if (b <= 0.0) {
        return 1.0;
    }
    if (a <= 0.0) {
        return std::min(window, b) / b;
    }
    if (window >= b) {
        return 1.0;
    }
    // t1 (on [0,a]) ahead of t2 by more than W.
    const double lower = window < a ? 0.5 * (a - window) * (a - window) : 0.0;
    // t2 ahead of t1 by more than W.
    const double c = b - window;
    const double upper = c >= a ? a * c - 0.5 * a * a : 0.5 * c * c;
    return std::clamp((a * b - lower - upper) / (a * b), 0.0, 1.0);
}

/// d/dW of overlap_prob at W = 0 for positive lambdas: 2 / max(lambda1, lambda2).
inline double overlap_density_at_zero(double lambda1, double lambda2) { return 2.0 / std::max(lambda1, lambda2); }

/// Outcome probabilities P(x1, x2 | alpha1, alpha2) ordered ++, +-, -+, --.
using OutcomeProbabilities = std::array<double, 4>;

namespace detail {

inline OutcomeProbabilities outcome_product(Angle alpha1, Angle alpha2, Angle phi1, Angle phi2) {
    const double p1 = polarizer_prob(+1, alpha1, phi1);
    const double p2 = polarizer_prob(+1, alpha2, phi2);
    return {p1 * p2, p1 * (1.0 - p2), (1.0 - p1) * p2, (1.0 - p1) * (1.0 - p2)};
}

} // namespace detail

/**
 * Integrates the singlet source (particle 2 polarized at xi + pi/2, xi
 * uniform) against the polarizer probabilities, weighting each xi by the
 * chance that the two time tags land within the window. The time integrals
 * are done in closed form; xi uses the periodic trapezoid rule.
 */
inline OutcomeProbabilities oracle_probabilities(Angle alpha1, Angle alpha2, const OracleConfig& cfg) {
    cfg.validate();
    const bool zero_window = cfg.window_ns == 0.0;

    if (zero_window && std::abs(std::sin(2.0 * (alpha1.value - alpha2.value))) < 1e-12) {
        // Both delays vanish together at xi = alpha1 + k pi/2; in the W -> 0
        // limit the weight collapses onto those four points.
        OutcomeProbabilities acc{};
        for (int k = 0; k < 4; ++k) {
            const Angle phi1{alpha1.value + k * kPi / 2.0};
            const auto p = detail::outcome_product(alpha1, alpha2, phi1, Angle{phi1.value + kPi / 2.0});
            for (int o = 0; o < 4; ++o) {
                acc[static_cast<std::size_t>(o)] += 0.25 * p[static_cast<std::size_t>(o)];
            }
        }
        return acc;
    }

    const double h = kTwoPi / cfg.grid_points;
    const double w_rel = cfg.window_ns / cfg.t0_ns;
    OutcomeProbabilities acc{};
    double norm = 0.0;
    // Nodes are anchored at alpha1 so a common rotation of both settings
    // maps the rule onto itself.
    for (int k = 0; k < cfg.grid_points; ++k) {
        const Angle phi1{alpha1.value + k * h};
        const Angle phi2{phi1.value + kPi / 2.0};
        const double s1 = std::sin(2.0 * (phi1.value - alpha1.value));
        const double s2 = std::sin(2.0 * (phi2.value - alpha2.value));
        const double lambda1 = s1 * s1 * s1 * s1;
        const double lambda2 = s2 * s2 * s2 * s2;
        const double weight =
            zero_window ? overlap_density_at_zero(lambda1, lambda2) : overlap_prob(lambda1, lambda2, w_rel);
        const auto p = detail::outcome_product(alpha1, alpha2, phi1, phi2);
        for (int o = 0; o < 4; ++o) {
            acc[static_cast<std::size_t>(o)] += weight * p[static_cast<std::size_t>(o)];
        }
        norm += weight;
    }
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw Error("oracle: coincidence weight vanishes for every source angle");
    }
    for (auto& v : acc) {
        v /= norm;
    }
    return acc;
}

inline double oracle_correlation(Angle alpha1, Angle alpha2, const OracleConfig& cfg) {
    const auto p = oracle_probabilities(alpha1, alpha2, cfg);
    return p[0] - p[1] - p[2] + p[3];
}

} // namespace ebsim

#endif // EBSIM_EPRB_ORACLE_HPP

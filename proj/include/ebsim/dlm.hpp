#ifndef EBSIM_DLM_HPP
#define EBSIM_DLM_HPP

#include <array>
#include <cmath>
#include <cstdint>

#include "ebsim/core.hpp"
#include "ebsim/spinor.hpp"

namespace ebsim {

/**
 * Adaptive threshold detector.
 *
 * On each arrival the internal vector p moves toward the incoming message,
 * p <- gamma p + (1 - gamma) e, and the detector then clicks with
 * probability |p|^2. p starts at the origin.
 */
struct DetectorState {
    Vec2 p{};
    double gamma = 0.99;
    std::uint64_t clicks = 0;
    std::uint64_t arrivals = 0;

    static DetectorState with_memory(double gamma) {
        require(gamma > 0.0 && gamma < 1.0, "detector gamma must lie in (0,1)");
        return DetectorState{Vec2{}, gamma, 0, 0};
    }
};

inline DetectorState dlm_update(DetectorState state, Vec2 message) {
    state.p = state.gamma * state.p + (1.0 - state.gamma) * message;
    ++state.arrivals;
    return state;
}

/// Theta(|p|^2 - r). Must follow the update for the same message.
inline bool threshold_click(DetectorState& state, double r) {
    const bool fired = state.p.norm2() > r;
    if (fired) {
        ++state.clicks;
    }
    return fired;
}

/// Relaxation rate Gamma = (1 - gamma) / (tau gamma) of the continuum limit.
inline double relaxation_rate(double gamma, double tau) {
    require(gamma > 0.0 && gamma < 1.0, "relaxation_rate: gamma must lie in (0,1)");
    require(tau > 0.0, "relaxation_rate: tau must be positive");
    return (1.0 - gamma) / (tau * gamma);
}

/// Memory parameter that realizes relaxation rate `rate` at step `tau`.
inline double gamma_for_rate(double rate, double tau) {
    require(rate > 0.0 && tau > 0.0, "gamma_for_rate: rate and tau must be positive");
    return 1.0 / (1.0 + rate * tau);
}

/**
 * Event-based beam splitter built on the same learning rule as the detector.
 *
 * Registers: per-port arrival estimates w (each in [0,1]) and per-port
 * smoothed messages u. Lossless convention: transmission sqrt(T), reflection
 * i sqrt(R).
 */
struct BeamSplitterState {
    std::array<double, 2> w{0.0, 0.0};
    std::array<Spinor, 2> u{};
    double gamma = 0.99;
    double reflectance = 0.2;

    static BeamSplitterState make(double gamma, double reflectance) {
        require(gamma > 0.0 && gamma < 1.0, "beam splitter gamma must lie in (0,1)");
        require(reflectance >= 0.0 && reflectance <= 1.0, "beam splitter reflectance must lie in [0,1]");
        BeamSplitterState s;
        s.gamma = gamma;
        s.reflectance = reflectance;
        return s;
    }

    double transmittance() const { return 1.0 - reflectance; }
};

struct Routed {
    int port = 0;
    Spinor message{};
};

/**
 * Routes one messenger through the beam splitter.
 *
 * The arriving message feeds its own port's amplitude directly; the opposite
 * port contributes its smoothed register (unit-normalized, zero before any
 * arrival). The messenger leaves by port 0 iff r < |b0|^2 / (|b0|^2 + |b1|^2)
 * and carries the normalized amplitude of that port.
 */
inline Routed bs_route(BeamSplitterState& state, const Spinor& message, int in_port, double r) {
    require(in_port == 0 || in_port == 1, "bs_route: in_port must be 0 or 1");
    const double g = state.gamma;
    const int other = 1 - in_port;

    state.w[0] *= g;
    state.w[1] *= g;
    state.w[static_cast<std::size_t>(in_port)] += 1.0 - g;
    auto& u_in = state.u[static_cast<std::size_t>(in_port)];
    u_in = g * u_in + (1.0 - g) * message;

    const Spinor& u_other = state.u[static_cast<std::size_t>(other)];
    const double other_norm = u_other.norm();
    const Spinor u_hat = other_norm > 0.0 ? (1.0 / other_norm) * u_other : Spinor{};

    std::array<Spinor, 2> a;
    a[static_cast<std::size_t>(in_port)] = std::sqrt(state.w[static_cast<std::size_t>(in_port)]) * message;
    a[static_cast<std::size_t>(other)] = std::sqrt(state.w[static_cast<std::size_t>(other)]) * u_hat;

    const double t = std::sqrt(state.transmittance());
    const Complex ir{0.0, std::sqrt(state.reflectance)};
    const Spinor b0 = Complex{t, 0.0} * a[0] + ir * a[1];
    const Spinor b1 = ir * a[0] + Complex{t, 0.0} * a[1];
    const double p0 = b0.norm2();
    const double p1 = b1.norm2();

    if (p0 + p1 <= 0.0) {
        // Cold start: bare transmission/reflection probabilities.
        const bool transmitted = r < state.transmittance();
        return {transmitted ? in_port : other, message};
    }
    if (r < p0 / (p0 + p1)) {
        return {0, (1.0 / std::sqrt(p0)) * b0};
    }
    return {1, (1.0 / std::sqrt(p1)) * b1};
}

} // namespace ebsim

#endif // EBSIM_DLM_HPP

#ifndef EBSIM_TWOBEAM_HPP
#define EBSIM_TWOBEAM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ebsim/core.hpp"
#include "ebsim/dlm.hpp"

namespace ebsim {

enum class DetectorKind { adaptive, counter };

/// Two-source interference setup. Lengths are in units of c/f.
struct TwoBeamConfig {
    double source_width = 1.0;        // a
    double source_separation = 5.0;   // d, center to center
    double screen_radius = 100.0;     // X
    double frequency = 1.0;           // f
    double velocity = 1.0;            // c
    double gamma = 0.99;
    int n_detectors = 181;
    std::uint64_t events_total = 1'810'000;
    std::uint64_t seed = 1;
    DetectorKind detector = DetectorKind::adaptive;

    void validate() const {
        require(source_width > 0.0, "twobeam: source width a must be positive");
        require(source_separation >= 0.0, "twobeam: source separation d must be non-negative");
        require(screen_radius > 0.0, "twobeam: screen radius X must be positive");
        require(source_separation / 2.0 + source_width / 2.0 < screen_radius,
                "twobeam: sources must lie strictly inside the screen (|y| < X)");
        require(frequency > 0.0 && velocity > 0.0, "twobeam: frequency and velocity must be positive");
        require(gamma > 0.0 && gamma < 1.0, "twobeam: gamma must lie in (0,1)");
        require(n_detectors > 0 && n_detectors % 2 == 1, "twobeam: n_detectors must be a positive odd number");
        require(events_total > 0, "twobeam: events_total must be positive");
    }
};

struct Emission {
    double y = 0.0;
    Angle beta{};
};

/// Source point uniform over the two slits, direction uniform on (-pi/2, pi/2).
inline Emission sample_emission(RngStream& rng, const TwoBeamConfig& cfg) {
    const double center = rng.bit() ? cfg.source_separation / 2.0 : -cfg.source_separation / 2.0;
    const double y = center + cfg.source_width * (rng.uniform() - 0.5);
    const double beta = kPi * (rng.uniform() - 0.5);
    return {y, Angle{beta}};
}

/// Angular position where a ray from (0, y) at angle beta meets the screen of radius X.
inline Angle hit_angle(double y, Angle beta, double screen_radius) {
    require(std::abs(y) < screen_radius, "hit_angle: requires |y| < X");
    const double cb = std::cos(beta.value);
    const double sb = std::sin(beta.value);
    const double yc2 = y * cb * cb;
    const double s = (yc2 + sb * std::sqrt(screen_radius * screen_radius - y * y * cb * cb)) / screen_radius;
    return Angle{std::asin(std::clamp(s, -1.0, 1.0))};
}

inline double flight_time(double y, Angle theta, double screen_radius, double velocity) {
    const double x = screen_radius;
    const double d2 = x * x - 2.0 * y * x * std::sin(theta.value) + y * y;
    return std::sqrt(std::max(d2, 0.0)) / velocity;
}

/// Phase message (cos 2 pi f t, sin 2 pi f t).
inline UnitVec2 message_of(double t, double frequency) { return UnitVec2::from_angle(kTwoPi * frequency * t); }

struct DetectorBin {
    Angle theta{};
    std::uint64_t clicks = 0;
    std::uint64_t arrivals = 0;
};

struct DetectorCounts {
    std::vector<DetectorBin> bins;
    std::uint64_t emitted = 0;

    std::uint64_t total_clicks() const {
        std::uint64_t n = 0;
        for (const auto& b : bins) {
            n += b.clicks;
        }
        return n;
    }
    std::uint64_t total_arrivals() const {
        std::uint64_t n = 0;
        for (const auto& b : bins) {
            n += b.arrivals;
        }
        return n;
    }
    double detected_ratio() const {
        return emitted == 0 ? 0.0 : static_cast<double>(total_clicks()) / static_cast<double>(emitted);
    }
};

/// Equal bins of width pi/n tiling [-pi/2, pi/2]; the middle bin is centered on 0.
inline Angle detector_center(int index, int n_detectors) {
    const double width = kPi / n_detectors;
    return Angle{-kPi / 2.0 + (index + 0.5) * width};
}

inline int detector_index(Angle theta, int n_detectors) {
    const double width = kPi / n_detectors;
    const int j = static_cast<int>(std::floor((theta.value + kPi / 2.0) / width));
    return std::clamp(j, 0, n_detectors - 1);
}

/**
 * Builds the screen pattern one messenger at a time. Only the detector whose
 * window contains the hit angle sees the message; all other detectors keep
 * their state.
 */
inline DetectorCounts run_twobeam(const TwoBeamConfig& cfg) {
    cfg.validate();
    RngStream source = make_stream(cfg.seed, 0);
    RngStream detector_rng = make_stream(cfg.seed, 1);

    std::vector<DetectorState> detectors(static_cast<std::size_t>(cfg.n_detectors),
                                         DetectorState::with_memory(cfg.gamma));
    for (std::uint64_t k = 0; k < cfg.events_total; ++k) {
        const Emission e = sample_emission(source, cfg);
        const Angle theta = hit_angle(e.y, e.beta, cfg.screen_radius);
        const double t = flight_time(e.y, theta, cfg.screen_radius, cfg.velocity);
        auto& det = detectors[static_cast<std::size_t>(detector_index(theta, cfg.n_detectors))];
        det = dlm_update(det, message_of(t, cfg.frequency));
        const double r = detector_rng.uniform();
        if (cfg.detector == DetectorKind::adaptive) {
            threshold_click(det, r);
        } else {
            ++det.clicks;
        }
    }

    DetectorCounts out;
    out.emitted = cfg.events_total;
    out.bins.reserve(detectors.size());
    for (int j = 0; j < cfg.n_detectors; ++j) {
        const auto& d = detectors[static_cast<std::size_t>(j)];
        out.bins.push_back({detector_center(j, cfg.n_detectors), d.clicks, d.arrivals});
    }
    return out;
}

} // namespace ebsim

#endif // EBSIM_TWOBEAM_HPP

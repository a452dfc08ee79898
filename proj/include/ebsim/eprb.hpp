#ifndef EBSIM_EPRB_HPP
#define EBSIM_EPRB_HPP

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "ebsim/core.hpp"

namespace ebsim {

/// Station settings and source parameters for the photon EPRB experiment.
struct EprbConfig {
    Angle a{0.0};
    Angle a_prime{kPi / 4.0};
    Angle b{kPi / 8.0};
    Angle b_prime{3.0 * kPi / 8.0};
    double t0_ns = 2000.0;
    std::uint64_t pairs = 300'000;
    std::uint64_t seed = 1;
    std::uint64_t stream_offset = 0; // streams stream_offset + {0, 1, 2}

    void validate() const {
        require(pairs > 0, "eprb: pairs must be positive");
        require(t0_ns > 0.0, "eprb: T0 must be positive");
    }
};

struct EventRecord {
    int x = 1;           // +1 or -1
    double t_ns = 0.0;   // time tag
    Angle alpha{};       // EOM setting in effect
    std::uint64_t n = 0; // pair index
};

using StationLog = std::vector<EventRecord>;

/// Polarization angle xi of the pair; particle 2 carries xi + pi/2.
inline Angle emit_pair(RngStream& rng) { return Angle{kTwoPi * rng.uniform()}; }

inline Angle particle_polarization(Angle xi, int station) { return Angle{xi.value + (station - 1) * kPi / 2.0}; }

inline Angle choose_setting(RngStream& rng, Angle s0, Angle s1) { return rng.bit() ? s1 : s0; }

/// xi' = xi + (i-1) pi/2 - alpha
inline Angle eom_rotate(Angle xi, int station, Angle alpha) {
    return Angle{particle_polarization(xi, station).value - alpha.value};
}

/// Polarizing beam splitter: +1 iff r <= cos^2 xi'.
inline int pbs_outcome(Angle xi_prime, double r) {
    const double c = std::cos(xi_prime.value);
    return r <= c * c ? 1 : -1;
}

/// Time tag T0 sin^4(2 xi') r'.
inline double time_tag(Angle xi_prime, double t0_ns, double r_prime) {
    const double s = std::sin(2.0 * xi_prime.value);
    return t0_ns * (s * s) * (s * s) * r_prime;
}

/// Everything one observation station does with an arriving particle. Reads
/// only the particle's own polarization, the local settings and the local
/// random stream.
inline EventRecord observe(RngStream& local, Angle particle_xi, Angle s0, Angle s1, double t0_ns, std::uint64_t n) {
    const Angle alpha = choose_setting(local, s0, s1);
    const Angle xi_prime{particle_xi.value - alpha.value};
    const int x = pbs_outcome(xi_prime, local.uniform());
    const double t = time_tag(xi_prime, t0_ns, local.uniform());
    return {x, t, alpha, n};
}

/// Generates both station logs. Stream offset+0 drives the source, offset+1
/// and offset+2 the two stations.
inline std::pair<StationLog, StationLog> run_eprb(const EprbConfig& cfg) {
    cfg.validate();
    RngStream source = make_stream(cfg.seed, cfg.stream_offset);
    RngStream station1 = make_stream(cfg.seed, cfg.stream_offset + 1);
    RngStream station2 = make_stream(cfg.seed, cfg.stream_offset + 2);

    std::pair<StationLog, StationLog> logs;
    logs.first.reserve(cfg.pairs);
    logs.second.reserve(cfg.pairs);
    for (std::uint64_t n = 0; n < cfg.pairs; ++n) {
        const Angle xi = emit_pair(source);
        logs.first.push_back(observe(station1, particle_polarization(xi, 1), cfg.a, cfg.a_prime, cfg.t0_ns, n));
        logs.second.push_back(observe(station2, particle_polarization(xi, 2), cfg.b, cfg.b_prime, cfg.t0_ns, n));
    }
    return logs;
}

} // namespace ebsim

#endif // EBSIM_EPRB_HPP

#ifndef EBSIM_NEUTRON_HPP
#define EBSIM_NEUTRON_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "ebsim/core.hpp"
#include "ebsim/dlm.hpp"
#include "ebsim/parallel.hpp"
#include "ebsim/spinor.hpp"

namespace ebsim {

enum class SpinAxis { x, y, z };

/// exp(-i (angle/2) sigma_axis) applied to s.
inline Spinor rotate_spinor(const Spinor& s, SpinAxis axis, Angle angle) {
    const double c = std::cos(angle.value / 2.0);
    const double sn = std::sin(angle.value / 2.0);
    switch (axis) {
    case SpinAxis::x: {
        const Complex mis{0.0, -sn};
        return {c * s.up + mis * s.down, mis * s.up + c * s.down};
    }
    case SpinAxis::y:
        return {c * s.up - sn * s.down, sn * s.up + c * s.down};
    case SpinAxis::z:
        return {std::polar(1.0, -angle.value / 2.0) * s.up, std::polar(1.0, angle.value / 2.0) * s.down};
    }
    return s;
}

/// Path phase shift: both components pick up e^{i chi}.
inline Spinor apply_phase(const Spinor& s, Angle chi) { return std::polar(1.0, chi.value) * s; }

/// Heusler analyzer: passes iff the spin-up projection exceeds r.
inline bool analyzer_select(const Spinor& s, double r) { return std::norm(s.up) > r; }

enum class ChiMode { fixed, per_event_random };

/**
 * One interferometer run at fixed spin-rotator angle alpha.
 *
 * In fixed mode every neutron sees phase chi. In per_event_random mode each
 * neutron draws its phase uniformly from chi_set and detections are tallied
 * per drawn value.
 */
struct NeutronConfig {
    Angle alpha{0.0};
    Angle chi{0.0};
    double gamma = 0.99;
    double reflectance = 0.2;
    std::uint64_t particles = 10'000; // measured neutrons, after warm-up
    std::uint64_t warmup = 1'000;
    std::uint64_t seed = 1;
    std::uint64_t stream_id = 0;
    ChiMode chi_mode = ChiMode::fixed;
    std::vector<Angle> chi_set;

    void validate() const {
        require(gamma > 0.0 && gamma < 1.0, "neutron: gamma must lie in (0,1)");
        require(reflectance > 0.0 && reflectance < 1.0, "neutron: reflectance must lie in (0,1)");
        require(particles > 0, "neutron: particles must be positive");
        require(chi_mode == ChiMode::fixed || !chi_set.empty(), "neutron: per-event random chi needs a chi set");
    }
};

struct NeutronCounts {
    std::uint64_t emitted = 0;  // measured neutrons entering the interferometer
    std::uint64_t o_beam = 0;   // of those, leaving through the O-beam
    std::uint64_t detected = 0; // of those, passing the analyzer
    std::vector<std::uint64_t> detected_by_chi; // per chi_set entry (random mode)
};

/// Index of the exit port of the last beam splitter that forms the O-beam.
inline constexpr int kOBeamPort = 1;
/// Path that carries the phase shifter.
inline constexpr int kPhaseShifterPath = 1;

/**
 * Neutron pipeline: spin-up source, BS0, Mu-metal turner (+pi/2 about y on
 * path 0, -pi/2 on path 1), phase shifter, BS3, spin rotator (alpha about x),
 * analyzer, counter. Neutrons leaving BS3 away from the O-beam are lost.
 */
inline NeutronCounts run_neutron(const NeutronConfig& cfg) {
    cfg.validate();
    RngStream rng = make_stream(cfg.seed, cfg.stream_id);
    BeamSplitterState bs0 = BeamSplitterState::make(cfg.gamma, cfg.reflectance);
    BeamSplitterState bs3 = BeamSplitterState::make(cfg.gamma, cfg.reflectance);
    const bool random_chi = cfg.chi_mode == ChiMode::per_event_random;

    NeutronCounts out;
    out.detected_by_chi.assign(random_chi ? cfg.chi_set.size() : 0, 0);
    const std::uint64_t total = cfg.warmup + cfg.particles;
    for (std::uint64_t k = 0; k < total; ++k) {
        const bool measured = k >= cfg.warmup;
        std::size_t chi_index = 0;
        Angle chi = cfg.chi;
        if (random_chi) {
            chi_index = static_cast<std::size_t>(rng.below(cfg.chi_set.size()));
            chi = cfg.chi_set[chi_index];
        }

        const Routed split = bs_route(bs0, Spinor::spin_up(), 0, rng.uniform());
        Spinor s = rotate_spinor(split.message, SpinAxis::y, Angle{split.port == 0 ? kPi / 2.0 : -kPi / 2.0});
        if (split.port == kPhaseShifterPath) {
            s = apply_phase(s, chi);
        }
        const Routed joined = bs_route(bs3, s, split.port, rng.uniform());
        const double r_analyzer = rng.uniform();
        if (measured) {
            ++out.emitted;
        }
        if (joined.port != kOBeamPort) {
            continue;
        }
        const Spinor rotated = rotate_spinor(joined.message, SpinAxis::x, cfg.alpha);
        if (!measured) {
            continue;
        }
        ++out.o_beam;
        if (analyzer_select(rotated, r_analyzer)) {
            ++out.detected;
            if (random_chi) {
                ++out.detected_by_chi[chi_index];
            }
        }
    }
    return out;
}

/// E = [N(a,c) + N(a+pi,c+pi) - N(a+pi,c) - N(a,c+pi)] / sum.
inline double neutron_correlation(std::uint64_t n_00, std::uint64_t n_pp, std::uint64_t n_p0, std::uint64_t n_0p) {
    const std::uint64_t sum = n_00 + n_pp + n_p0 + n_0p;
    if (sum == 0) {
        throw Error("neutron_correlation: all four counts are zero");
    }
    const double num = static_cast<double>(n_00 + n_pp) - static_cast<double>(n_p0 + n_0p);
    return num / static_cast<double>(sum);
}

struct NeutronPoint {
    Angle alpha{};
    Angle chi{};
    std::uint64_t n_00 = 0; // N(alpha, chi)
    std::uint64_t n_pp = 0; // N(alpha+pi, chi+pi)
    std::uint64_t n_p0 = 0; // N(alpha+pi, chi)
    std::uint64_t n_0p = 0; // N(alpha, chi+pi)
    double e = 0.0;

    std::uint64_t total() const { return n_00 + n_pp + n_p0 + n_0p; }
    double sigma() const { return std::sqrt(std::max(1.0 - e * e, 0.0) / static_cast<double>(total())); }
};

/// Shared parameters for correlation measurements; alpha/chi/stream are set per run.
struct NeutronExperiment {
    double gamma = 0.99;
    double reflectance = 0.2;
    std::uint64_t particles = 10'000; // per count
    std::uint64_t warmup = 1'000;
    std::uint64_t seed = 1;
    ChiMode chi_mode = ChiMode::fixed;
    unsigned threads = 1;
};

namespace detail {

inline std::int64_t angle_key(Angle a) { return std::llround(a.canonical().value * 1e9) % std::llround(kTwoPi * 1e9); }

inline std::uint64_t setting_stream(std::int64_t alpha_key, std::int64_t chi_key, std::uint64_t tag) {
    std::uint64_t x = static_cast<std::uint64_t>(alpha_key) * 0x9E3779B97F4A7C15ULL;
    std::uint64_t y = static_cast<std::uint64_t>(chi_key) ^ (tag << 56);
    return splitmix64(x) ^ rotl(splitmix64(y), 17);
}

} // namespace detail

/**
 * E(alpha, chi) at every requested (alpha, chi) pair.
 *
 * Fixed mode: each distinct setting N(alpha', chi') is measured once with a
 * fresh, warmed interferometer and its own stream, and shared between the
 * points that need it. Random mode: one run per distinct alpha' in which chi
 * is drawn per neutron from the union of the requested chi values and their
 * pi-shifted partners.
 */
inline std::vector<NeutronPoint> neutron_correlations(const NeutronExperiment& ex,
                                                      const std::vector<std::pair<Angle, Angle>>& points) {
    using Key = std::pair<std::int64_t, std::int64_t>;
    std::map<std::int64_t, Angle> alphas;
    std::map<std::int64_t, Angle> chis;
    for (const auto& [a, c] : points) {
        for (const Angle da : {Angle{0.0}, Angle{kPi}}) {
            const Angle aa = (a + da).canonical();
            alphas.emplace(detail::angle_key(aa), aa);
        }
        for (const Angle dc : {Angle{0.0}, Angle{kPi}}) {
            const Angle cc = (c + dc).canonical();
            chis.emplace(detail::angle_key(cc), cc);
        }
    }

    std::map<Key, std::uint64_t> counts;
    if (ex.chi_mode == ChiMode::fixed) {
        std::map<Key, std::pair<Angle, Angle>> settings;
        for (const auto& [a, c] : points) {
            for (const Angle da : {Angle{0.0}, Angle{kPi}}) {
                for (const Angle dc : {Angle{0.0}, Angle{kPi}}) {
                    const Angle aa = (a + da).canonical();
                    const Angle cc = (c + dc).canonical();
                    settings.emplace(Key{detail::angle_key(aa), detail::angle_key(cc)}, std::pair{aa, cc});
                }
            }
        }
        std::vector<std::pair<Key, std::pair<Angle, Angle>>> jobs(settings.begin(), settings.end());
        const auto results = parallel_map<std::uint64_t>(jobs.size(), ex.threads, [&](std::size_t k) {
            NeutronConfig cfg;
            cfg.alpha = jobs[k].second.first;
            cfg.chi = jobs[k].second.second;
            cfg.gamma = ex.gamma;
            cfg.reflectance = ex.reflectance;
            cfg.particles = ex.particles;
            cfg.warmup = ex.warmup;
            cfg.seed = ex.seed;
            cfg.stream_id = detail::setting_stream(jobs[k].first.first, jobs[k].first.second, 0);
            return run_neutron(cfg).detected;
        });
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            counts[jobs[k].first] = results[k];
        }
    } else {
        std::vector<Angle> chi_set;
        std::vector<std::int64_t> chi_keys;
        for (const auto& [key, c] : chis) {
            chi_keys.push_back(key);
            chi_set.push_back(c);
        }
        std::vector<std::pair<std::int64_t, Angle>> jobs(alphas.begin(), alphas.end());
        const auto results = parallel_map<std::vector<std::uint64_t>>(jobs.size(), ex.threads, [&](std::size_t k) {
            NeutronConfig cfg;
            cfg.alpha = jobs[k].second;
            cfg.gamma = ex.gamma;
            cfg.reflectance = ex.reflectance;
            cfg.particles = ex.particles * chi_set.size();
            cfg.warmup = ex.warmup;
            cfg.seed = ex.seed;
            cfg.stream_id = detail::setting_stream(jobs[k].first, 0, 1);
            cfg.chi_mode = ChiMode::per_event_random;
            cfg.chi_set = chi_set;
            return run_neutron(cfg).detected_by_chi;
        });
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            for (std::size_t j = 0; j < chi_keys.size(); ++j) {
                counts[Key{jobs[k].first, chi_keys[j]}] = results[k][j];
            }
        }
    }

    std::vector<NeutronPoint> out;
    out.reserve(points.size());
    for (const auto& [a, c] : points) {
        auto n = [&](Angle da, Angle dc) {
            return counts.at(Key{detail::angle_key((a + da).canonical()), detail::angle_key((c + dc).canonical())});
        };
        NeutronPoint p;
        p.alpha = a;
        p.chi = c;
        p.n_00 = n(Angle{0.0}, Angle{0.0});
        p.n_pp = n(Angle{kPi}, Angle{kPi});
        p.n_p0 = n(Angle{kPi}, Angle{0.0});
        p.n_0p = n(Angle{0.0}, Angle{kPi});
        p.e = neutron_correlation(p.n_00, p.n_pp, p.n_p0, p.n_0p);
        out.push_back(p);
    }
    return out;
}

/// Uniform n x n grid over [0, 2pi) in both alpha and chi.
inline std::vector<std::pair<Angle, Angle>> neutron_grid(int n) {
    require(n > 0, "neutron_grid: size must be positive");
    std::vector<std::pair<Angle, Angle>> pts;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            pts.emplace_back(Angle{kTwoPi * i / n}, Angle{kTwoPi * j / n});
        }
    }
    return pts;
}

struct NeutronChsh {
    double s = 0.0;
    double sigma = 0.0;
    std::vector<NeutronPoint> points; // (a,c), (a,c'), (a',c), (a',c')
};

/**
 * S = E(a,c) + E(a,c') - E(a',c) + E(a',c'), the arrangement that reaches
 * 2 sqrt(2) for E = cos(alpha + chi) at a=0, a'=pi/2, c=pi/4, c'=-pi/4.
 */
inline NeutronChsh neutron_chsh(const NeutronExperiment& ex, Angle a = Angle{0.0}, Angle a_prime = Angle{kPi / 2.0},
                                Angle c = Angle{kPi / 4.0}, Angle c_prime = Angle{-kPi / 4.0}) {
    NeutronChsh out;
    out.points = neutron_correlations(ex, {{a, c}, {a, c_prime}, {a_prime, c}, {a_prime, c_prime}});
    const auto& p = out.points;
    out.s = p[0].e + p[1].e - p[2].e + p[3].e;
    double var = 0.0;
    for (const auto& pt : p) {
        var += pt.sigma() * pt.sigma();
    }
    out.sigma = std::sqrt(var);
    return out;
}

} // namespace ebsim

#endif // EBSIM_NEUTRON_HPP

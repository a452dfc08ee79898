#ifndef EBSIM_ANALYSIS_HPP
#define EBSIM_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "ebsim/core.hpp"
#include "ebsim/eprb.hpp"
#include "ebsim/twobeam.hpp"

namespace ebsim {

inline constexpr double kInfiniteWindow = std::numeric_limits<double>::infinity();

/// Raised when a correlation is requested over an empty selection.
struct NoCoincidences : Error {
    using Error::Error;
};

enum class PairingMode {
    same_index,   // record n at station 1 against record n at station 2
    time_ordered, // greedy unique matching on time tags only
};

struct Match {
    std::size_t i = 0; // index into station-1 log
    std::size_t j = 0; // index into station-2 log
};

namespace detail {

/// "Next unmatched slot at or after k" with path halving.
class NextFree {
public:
    explicit NextFree(std::size_t n) : next_(n + 1) { std::iota(next_.begin(), next_.end(), std::size_t{0}); }
    std::size_t find(std::size_t k) {
        while (next_[k] != k) {
            next_[k] = next_[next_[k]];
            k = next_[k];
        }
        return k;
    }
    void take(std::size_t k) { next_[k] = k + 1; }

private:
    std::vector<std::size_t> next_;
};

inline std::vector<std::size_t> time_order(const StationLog& log) {
    std::vector<std::size_t> idx(log.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) { return log[l].t_ns < log[r].t_ns; });
    return idx;
}

} // namespace detail

/**
 * Pairs up detections under the closed window |t1 - t2| <= W.
 *
 * same_index: pair n is a coincidence iff its two tags fall within W.
 * time_ordered: station-1 events are scanned in time order and each takes
 * the earliest still-unmatched station-2 event within W (equal times resolve
 * toward the lower station-2 index). No event is used twice.
 */
inline std::vector<Match> match_pairs(const StationLog& log1, const StationLog& log2, double window_ns,
                                      PairingMode mode) {
    require(window_ns >= 0.0, "coincidence window must be non-negative");
    std::vector<Match> out;
    if (mode == PairingMode::same_index) {
        require(log1.size() == log2.size(), "same_index pairing requires logs of equal length");
        for (std::size_t n = 0; n < log1.size(); ++n) {
            if (std::abs(log1[n].t_ns - log2[n].t_ns) <= window_ns) {
                out.push_back({n, n});
            }
        }
        return out;
    }

    const auto order1 = detail::time_order(log1);
    const auto order2 = detail::time_order(log2);
    detail::NextFree free(order2.size());
    std::size_t lo = 0;
    for (const std::size_t i : order1) {
        const double t1 = log1[i].t_ns;
        while (lo < order2.size() && log2[order2[lo]].t_ns < t1 - window_ns) {
            ++lo;
        }
        const std::size_t k = free.find(lo);
        if (k < order2.size() && log2[order2[k]].t_ns <= t1 + window_ns) {
            out.push_back({i, order2[k]});
            free.take(k);
        }
    }
    std::sort(out.begin(), out.end(), [](const Match& l, const Match& r) { return l.i < r.i; });
    return out;
}

/// Coincidence counts C_xy for one setting pair.
struct CoincidenceCounts {
    Angle alpha1{};
    Angle alpha2{};
    std::uint64_t pp = 0;
    std::uint64_t pm = 0;
    std::uint64_t mp = 0;
    std::uint64_t mm = 0;

    std::uint64_t total() const { return pp + pm + mp + mm; }

    void add(int x1, int x2) {
        if (x1 > 0) {
            (x2 > 0 ? pp : pm) += 1;
        } else {
            (x2 > 0 ? mp : mm) += 1;
        }
    }
};

inline bool same_setting(Angle l, Angle r) { return std::abs(l.value - r.value) <= 1e-12; }

/// Counts for every setting pair that occurs in the logs.
struct CoincidenceTable {
    std::vector<CoincidenceCounts> entries;

    CoincidenceCounts& slot(Angle a1, Angle a2) {
        for (auto& e : entries) {
            if (same_setting(e.alpha1, a1) && same_setting(e.alpha2, a2)) {
                return e;
            }
        }
        entries.push_back(CoincidenceCounts{a1, a2});
        return entries.back();
    }

    /// Counts for (a1, a2); a zero entry if the pair never coincided.
    CoincidenceCounts at(Angle a1, Angle a2) const {
        for (const auto& e : entries) {
            if (same_setting(e.alpha1, a1) && same_setting(e.alpha2, a2)) {
                return e;
            }
        }
        return CoincidenceCounts{a1, a2};
    }

    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (const auto& e : entries) {
            n += e.total();
        }
        return n;
    }
};

inline CoincidenceTable count_coincidences(const StationLog& log1, const StationLog& log2, double window_ns,
                                           PairingMode mode = PairingMode::same_index) {
    CoincidenceTable table;
    for (const Match& m : match_pairs(log1, log2, window_ns, mode)) {
        const auto& e1 = log1[m.i];
        const auto& e2 = log2[m.j];
        table.slot(e1.alpha, e2.alpha).add(e1.x, e2.x);
    }
    return table;
}

/// E = (C++ + C-- - C+- - C-+) / total.
inline double correlation(const CoincidenceCounts& c) {
    const std::uint64_t n = c.total();
    if (n == 0) {
        throw NoCoincidences("no coincidences for setting pair (" + std::to_string(c.alpha1.value) + ", " +
                             std::to_string(c.alpha2.value) + ")");
    }
    const double same = static_cast<double>(c.pp + c.mm);
    const double diff = static_cast<double>(c.pm + c.mp);
    return (same - diff) / static_cast<double>(n);
}

/// Binomial standard error of a correlation estimate.
inline double correlation_sigma(const CoincidenceCounts& c) {
    const double e = correlation(c);
    return std::sqrt(std::max(1.0 - e * e, 0.0) / static_cast<double>(c.total()));
}

inline double chsh(double e_ab, double e_abp, double e_apb, double e_apbp) { return e_ab - e_abp + e_apb + e_apbp; }

struct ChshSettings {
    Angle a{0.0};
    Angle a_prime{kPi / 4.0};
    Angle b{kPi / 8.0};
    Angle b_prime{3.0 * kPi / 8.0};
};

struct ChshEstimate {
    double s = 0.0;
    double sigma = 0.0;
    std::uint64_t coincidences = 0;
};

inline ChshEstimate chsh_from_table(const CoincidenceTable& table, const ChshSettings& st) {
    const CoincidenceCounts cs[4] = {table.at(st.a, st.b), table.at(st.a, st.b_prime), table.at(st.a_prime, st.b),
                                     table.at(st.a_prime, st.b_prime)};
    double e[4];
    double var = 0.0;
    std::uint64_t n = 0;
    for (int k = 0; k < 4; ++k) {
        e[k] = correlation(cs[k]);
        const double sd = correlation_sigma(cs[k]);
        var += sd * sd;
        n += cs[k].total();
    }
    return {chsh(e[0], e[1], e[2], e[3]), std::sqrt(var), n};
}

struct WindowPoint {
    double window_ns = 0.0;
    double s_abs = 0.0;
    double sigma = 0.0;
    std::uint64_t coincidences = 0;
};

struct WindowSweepResult {
    std::vector<WindowPoint> points;

    /// First W (linear interpolation) at which |S| falls to `level` or below.
    std::optional<double> crossing(double level = 2.0) const {
        for (std::size_t k = 1; k < points.size(); ++k) {
            const auto& p0 = points[k - 1];
            const auto& p1 = points[k];
            if (p0.s_abs > level && p1.s_abs <= level) {
                if (!std::isfinite(p1.window_ns)) {
                    return p0.window_ns;
                }
                const double f = (p0.s_abs - level) / (p0.s_abs - p1.s_abs);
                return p0.window_ns + f * (p1.window_ns - p0.window_ns);
            }
        }
        return std::nullopt;
    }
};

/// |S| at each window, all evaluated on the same pair of logs.
inline WindowSweepResult window_sweep(const StationLog& log1, const StationLog& log2, std::span<const double> windows,
                                      const ChshSettings& settings = {}, PairingMode mode = PairingMode::same_index) {
    require(!windows.empty(), "window_sweep: window list must not be empty");
    WindowSweepResult out;
    for (std::size_t k = 0; k < windows.size(); ++k) {
        require(k == 0 || windows[k] > windows[k - 1], "window_sweep: windows must be strictly increasing");
        const auto est = chsh_from_table(count_coincidences(log1, log2, windows[k], mode), settings);
        out.points.push_back({windows[k], std::abs(est.s), est.sigma, est.coincidences});
    }
    return out;
}

/// Mean of x over the records taken with `setting`.
inline double singles_average(const StationLog& log, Angle setting) {
    std::int64_t sum = 0;
    std::uint64_t n = 0;
    for (const auto& rec : log) {
        if (same_setting(rec.alpha, setting)) {
            sum += rec.x;
            ++n;
        }
    }
    if (n == 0) {
        throw NoCoincidences("singles_average: no records with the requested setting");
    }
    return static_cast<double>(sum) / static_cast<double>(n);
}

/// Histogram of t1 - t2, symmetric about a bin centered on zero.
struct TimeTagHistogram {
    double bin_ns = 1.0;
    int half_width = 0; // bins on each side of the zero bin
    std::vector<std::uint64_t> counts;

    int zero_index() const { return half_width; }
    double center(std::size_t k) const { return (static_cast<int>(k) - half_width) * bin_ns; }
    std::uint64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }
    std::size_t mode_index() const {
        return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
};

inline TimeTagHistogram timetag_histogram(const StationLog& log1, const StationLog& log2, double bin_ns,
                                          double window_ns = kInfiniteWindow,
                                          PairingMode mode = PairingMode::same_index) {
    require(bin_ns > 0.0, "timetag_histogram: bin width must be positive");
    const auto matches = match_pairs(log1, log2, window_ns, mode);
    std::vector<double> diffs;
    diffs.reserve(matches.size());
    double max_abs = 0.0;
    for (const auto& m : matches) {
        diffs.push_back(log1[m.i].t_ns - log2[m.j].t_ns);
        max_abs = std::max(max_abs, std::abs(diffs.back()));
    }
    TimeTagHistogram h;
    h.bin_ns = bin_ns;
    h.half_width = static_cast<int>(std::floor(max_abs / bin_ns + 0.5));
    h.counts.assign(static_cast<std::size_t>(2 * h.half_width + 1), 0);
    for (const double d : diffs) {
        const int k = static_cast<int>(std::floor(d / bin_ns + 0.5)) + h.half_width;
        h.counts[static_cast<std::size_t>(std::clamp(k, 0, 2 * h.half_width))] += 1;
    }
    return h;
}

/**
 * Far-field two-source intensity divided by its amplitude:
 * sinc^2(q a sin(theta) / 2) cos^2(q d sin(theta) / 2), with sinc(0) = 1.
 */
inline double fraunhofer_intensity(Angle theta, double q, double a, double d) {
    const double s = std::sin(theta.value);
    const double u = q * a * s / 2.0;
    const double v = q * d * s / 2.0;
    // Series for sin(u)/u below the point where it is exact to double precision.
    const double sinc = std::abs(u) < 1e-4 ? 1.0 - u * u / 6.0 : std::sin(u) / u;
    const double c = std::cos(v);
    return sinc * sinc * c * c;
}

struct AmplitudeFit {
    double amplitude = 0.0;
    double rms = 0.0; // root-mean-square residual over peak count
};

/// Single-parameter least squares counts ~ A * model.
inline AmplitudeFit fit_amplitude(std::span<const double> counts, std::span<const double> model) {
    require(counts.size() == model.size() && !counts.empty(), "fit_amplitude: counts and model must match in size");
    double mm = 0.0;
    double mc = 0.0;
    double peak = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        mm += model[k] * model[k];
        mc += model[k] * counts[k];
        peak = std::max(peak, std::abs(counts[k]));
    }
    require(mm > 0.0, "fit_amplitude: model is identically zero");
    const double a = mc / mm;
    double ss = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double r = counts[k] - a * model[k];
        ss += r * r;
    }
    const double rms = std::sqrt(ss / static_cast<double>(counts.size()));
    return {a, peak > 0.0 ? rms / peak : 0.0};
}

/// Fits detector clicks against the far-field curve for the run's geometry.
inline AmplitudeFit fit_fraunhofer(const DetectorCounts& counts, const TwoBeamConfig& cfg) {
    const double q = kTwoPi * cfg.frequency / cfg.velocity;
    std::vector<double> data;
    std::vector<double> model;
    for (const auto& bin : counts.bins) {
        data.push_back(static_cast<double>(bin.clicks));
        model.push_back(fraunhofer_intensity(bin.theta, q, cfg.source_width, cfg.source_separation));
    }
    return fit_amplitude(data, model);
}

} // namespace ebsim

#endif // EBSIM_ANALYSIS_HPP

#ifndef EBSIM_APP_HPP
#define EBSIM_APP_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ebsim/analysis.hpp"
#include "ebsim/config.hpp"
#include "ebsim/core.hpp"
#include "ebsim/eprb.hpp"
#include "ebsim/eprb_oracle.hpp"
#include "ebsim/neutron.hpp"
#include "ebsim/parallel.hpp"
#include "ebsim/twobeam.hpp"

namespace ebsim::app {

using json = nlohmann::ordered_json;

/// Overrides supplied on the command line.
struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    unsigned threads = 1;
};

struct ParamInfo {
    std::string name;
    std::string fallback;
};

struct ExperimentInfo {
    std::string name;
    std::string description;
    std::vector<ParamInfo> params;
};

inline const std::vector<ExperimentInfo>& experiments() {
    static const std::vector<ExperimentInfo> list = {
        {"twobeam",
         "two-source interference on a semicircular screen of adaptive threshold detectors",
         {{"source_width", "1"},
          {"source_separation", "5"},
          {"screen_radius", "100"},
          {"frequency", "1"},
          {"velocity", "1"},
          {"gamma", "0.99"},
          {"detectors", "181"},
          {"emissions", "1810000"},
          {"detector", "\"adaptive\" | \"counter\""}}},
        {"eprb",
         "photon EPRB run analyzed at one coincidence window, optionally over a list of theta offsets",
         {{"a_deg", "0"},
          {"a_prime_deg", "45"},
          {"b_deg", "22.5"},
          {"b_prime_deg", "67.5"},
          {"theta_deg", "[0]"},
          {"t0_ns", "2000"},
          {"pairs", "300000"},
          {"window_ns", "2"},
          {"pairing", "\"same_index\" | \"time_ordered\""},
          {"write_logs", "false"}}},
        {"eprb_sweep",
         "|S| of one EPRB run as a function of the coincidence window",
         {{"a_deg", "0"},
          {"a_prime_deg", "45"},
          {"b_deg", "22.5"},
          {"b_prime_deg", "67.5"},
          {"t0_ns", "2000"},
          {"pairs", "300000"},
          {"windows_ns", "[1, 2, 5, ..., 2000, inf]"},
          {"pairing", "\"same_index\" | \"time_ordered\""}}},
        {"eprb_oracle",
         "deterministic quadrature of the EPRB model; window 0 selects the W -> 0 limit",
         {{"pairs_deg", "[[0, 22.5], ...] (8 pairs)"},
          {"windows_ns", "[0, 2]"},
          {"t0_ns", "2000"},
          {"grid_points", "4096"}}},
        {"neutron",
         "single-neutron interferometer CHSH combination S_max",
         {{"gamma", "0.99"},
          {"reflectance", "0.2"},
          {"particles", "10000"},
          {"warmup", "1000"},
          {"chi_mode", "\"fixed\" | \"random\""},
          {"alpha_deg", "0"},
          {"alpha_prime_deg", "90"},
          {"chi_deg", "45"},
          {"chi_prime_deg", "-45"}}},
        {"neutron_grid",
         "single-neutron correlation E(alpha, chi) on an n x n grid",
         {{"gamma", "0.99"},
          {"reflectance", "0.2"},
          {"particles", "10000"},
          {"warmup", "1000"},
          {"chi_mode", "\"fixed\" | \"random\""},
          {"grid", "8"}}},
    };
    return list;
}

inline std::string list_text() {
    std::ostringstream out;
    for (const auto& e : experiments()) {
        out << e.name << "  " << e.description << "\n";
        for (const auto& p : e.params) {
            out << "    " << p.name << " = " << p.fallback << "\n";
        }
    }
    return out.str();
}

/// 9 significant digits, "inf"/"-inf"/"nan" for non-finite values.
inline std::string fmt(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string fmt(std::uint64_t v) { return std::to_string(v); }
inline std::string fmt(std::int64_t v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }

/// JSON number, or the string "inf" where JSON has no representation.
inline json json_real(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    return fmt(v);
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) {
            throw Error("cannot write " + path.string());
        }
        row(header);
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            out_ << (k ? "," : "") << cells[k];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

inline void write_station_log(const std::filesystem::path& path, const StationLog& log) {
    CsvWriter csv(path, {"n", "x", "t_ns", "alpha_rad"});
    for (const auto& r : log) {
        csv.row({fmt(r.n), fmt(r.x), fmt(r.t_ns), fmt(r.alpha.value)});
    }
}

namespace detail {

inline ConfigValue value_from_json(const nlohmann::json& j) {
    ConfigValue v;
    if (j.is_boolean()) {
        v.kind = ConfigValue::Kind::boolean;
        v.b = j.get<bool>();
    } else if (j.is_number_integer()) {
        v.kind = ConfigValue::Kind::integer;
        v.i = j.get<std::int64_t>();
    } else if (j.is_number()) {
        v.kind = ConfigValue::Kind::real;
        v.d = j.get<double>();
    } else if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "-inf") {
            v.kind = ConfigValue::Kind::real;
            v.d = s == "inf" ? kInfiniteWindow : -kInfiniteWindow;
        } else {
            v.kind = ConfigValue::Kind::string;
            v.s = s;
        }
    } else if (j.is_array()) {
        v.kind = ConfigValue::Kind::array;
        for (const auto& item : j) {
            v.items.push_back(value_from_json(item));
        }
    } else {
        throw ConfigError(0, "manifest: unsupported value " + j.dump());
    }
    return v;
}

inline void flatten_json(ConfigDocument& doc, const nlohmann::json& j, const std::string& prefix) {
    for (const auto& [key, value] : j.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) {
            flatten_json(doc, value, path);
        } else {
            doc.set(path, value_from_json(value));
        }
    }
}

} // namespace detail

/// Reads a config file, or the `config` section of a previous run's manifest.json.
inline ConfigDocument load_config(const std::filesystem::path& path) {
    if (path.extension() != ".json") {
        return ConfigDocument::load(path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(0, "cannot read config file '" + path.string() + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(0, std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object()) {
        throw ConfigError(0, "manifest has no 'config' object");
    }
    ConfigDocument doc;
    detail::flatten_json(doc, j["config"], "");
    return doc;
}

/// Everything a runner needs once the configuration is resolved.
struct Job {
    std::string experiment;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir;
    unsigned threads = 1;
    json parameters = json::object();
    std::function<json(const Job&)> execute;
};

namespace detail {

inline Angle deg(ConfigReader& r, json& params, const std::string& key, double fallback) {
    const double v = r.real("parameters." + key, fallback);
    params[key] = v;
    return Angle::degrees(v);
}

inline PairingMode pairing(ConfigReader& r, json& params) {
    const auto s = r.choice("parameters.pairing", "same_index", {"same_index", "time_ordered"});
    params["pairing"] = s;
    return s == "same_index" ? PairingMode::same_index : PairingMode::time_ordered;
}

inline ChshSettings chsh_settings(ConfigReader& r, json& params) {
    ChshSettings st;
    st.a = deg(r, params, "a_deg", 0.0);
    st.a_prime = deg(r, params, "a_prime_deg", 45.0);
    st.b = deg(r, params, "b_deg", 22.5);
    st.b_prime = deg(r, params, "b_prime_deg", 67.5);
    return st;
}

inline std::vector<double> default_windows() {
    std::vector<double> w = {1, 2, 5, 10, 20, 50};
    for (int k = 100; k <= 1000; k += 50) {
        w.push_back(k);
    }
    w.push_back(1500);
    w.push_back(2000);
    w.push_back(kInfiniteWindow);
    return w;
}

inline json json_reals(const std::vector<double>& v) {
    json out = json::array();
    for (const double x : v) {
        out.push_back(json_real(x));
    }
    return out;
}

inline void prepare_twobeam(ConfigReader& r, Job& job) {
    TwoBeamConfig cfg;
    cfg.source_width = r.real("parameters.source_width", cfg.source_width);
    cfg.source_separation = r.real("parameters.source_separation", cfg.source_separation);
    cfg.screen_radius = r.real("parameters.screen_radius", cfg.screen_radius);
    cfg.frequency = r.real("parameters.frequency", cfg.frequency);
    cfg.velocity = r.real("parameters.velocity", cfg.velocity);
    cfg.gamma = r.real("parameters.gamma", cfg.gamma);
    cfg.n_detectors = static_cast<int>(r.integer("parameters.detectors", cfg.n_detectors));
    cfg.events_total = r.count("parameters.emissions", cfg.events_total);
    const auto kind = r.choice("parameters.detector", "adaptive", {"adaptive", "counter"});
    cfg.detector = kind == "adaptive" ? DetectorKind::adaptive : DetectorKind::counter;
    cfg.seed = job.seed;
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(0, e.what());
    }

    job.parameters = {{"source_width", cfg.source_width},   {"source_separation", cfg.source_separation},
                      {"screen_radius", cfg.screen_radius}, {"frequency", cfg.frequency},
                      {"velocity", cfg.velocity},           {"gamma", cfg.gamma},
                      {"detectors", cfg.n_detectors},       {"emissions", cfg.events_total},
                      {"detector", kind}};
    job.execute = [cfg](const Job& j) {
        const DetectorCounts counts = run_twobeam(cfg);
        CsvWriter csv(j.out_dir / "detectors.csv", {"theta_deg", "arrivals", "clicks"});
        for (const auto& b : counts.bins) {
            csv.row({fmt(b.theta.deg()), fmt(b.arrivals), fmt(b.clicks)});
        }
        const AmplitudeFit fit = fit_fraunhofer(counts, cfg);
        return json{{"A_fit", fit.amplitude},
                    {"rms_residual", fit.rms},
                    {"detected_ratio", counts.detected_ratio()},
                    {"emitted", counts.emitted},
                    {"clicks", counts.total_clicks()}};
    };
}

inline void prepare_eprb(ConfigReader& r, Job& job) {
    json params;
    const ChshSettings base = chsh_settings(r, params);
    const auto thetas = r.reals("parameters.theta_deg", {0.0});
    EprbConfig cfg;
    cfg.t0_ns = r.real("parameters.t0_ns", cfg.t0_ns);
    cfg.pairs = r.count("parameters.pairs", cfg.pairs);
    const double window = r.real("parameters.window_ns", 2.0);
    const PairingMode mode = pairing(r, params);
    const bool write_logs = r.boolean("parameters.write_logs", false);
    cfg.seed = job.seed;
    if (thetas.empty()) {
        throw ConfigError(0, "'parameters.theta_deg' must not be empty");
    }
    if (!(window >= 0.0)) {
        throw ConfigError(0, "'parameters.window_ns' must be non-negative");
    }
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(0, e.what());
    }
    params["theta_deg"] = thetas;
    params["t0_ns"] = cfg.t0_ns;
    params["pairs"] = cfg.pairs;
    params["window_ns"] = json_real(window);
    params["write_logs"] = write_logs;
    job.parameters = params;

    job.execute = [=](const Job& j) {
        struct Point {
            ChshSettings st;
            CoincidenceTable table;
            ChshEstimate est;
        };
        // Theta point k owns streams 3k, 3k+1, 3k+2.
        const auto points = parallel_map<Point>(thetas.size(), j.threads, [&](std::size_t k) {
            EprbConfig c = cfg;
            const Angle theta = Angle::degrees(thetas[k]);
            c.a = base.a + theta;
            c.a_prime = base.a_prime + theta;
            c.b = base.b;
            c.b_prime = base.b_prime;
            c.stream_offset = 3 * k;
            const auto logs = run_eprb(c);
            if (write_logs) {
                const std::string suffix = thetas.size() == 1 ? "" : "_" + std::to_string(k);
                write_station_log(j.out_dir / ("station1" + suffix + ".csv"), logs.first);
                write_station_log(j.out_dir / ("station2" + suffix + ".csv"), logs.second);
            }
            Point p;
            p.st = {c.a, c.a_prime, c.b, c.b_prime};
            p.table = count_coincidences(logs.first, logs.second, window, mode);
            return p;
        });

        CsvWriter corr(j.out_dir / "correlations.csv", {"alpha1", "alpha2", "E", "n_coinc"});
        for (const auto& p : points) {
            for (const auto& [a1, a2] : {std::pair{p.st.a, p.st.b}, std::pair{p.st.a, p.st.b_prime},
                                         std::pair{p.st.a_prime, p.st.b}, std::pair{p.st.a_prime, p.st.b_prime}}) {
                const auto c = p.table.at(a1, a2);
                corr.row({fmt(a1.value), fmt(a2.value), c.total() ? fmt(correlation(c)) : "nan", fmt(c.total())});
            }
        }
        CsvWriter s_csv(j.out_dir / "s_theta.csv", {"theta_deg", "S", "sigma", "n_coinc"});
        json s_rows = json::array();
        std::optional<double> s_theta0;
        double max_dev = 0.0;
        for (std::size_t k = 0; k < points.size(); ++k) {
            const ChshEstimate est = chsh_from_table(points[k].table, points[k].st);
            s_csv.row({fmt(thetas[k]), fmt(est.s), fmt(est.sigma), fmt(est.coincidences)});
            s_rows.push_back({{"theta_deg", thetas[k]}, {"S", est.s}, {"sigma", est.sigma}});
            const double singlet = -2.0 * std::sqrt(2.0) * std::cos(2.0 * Angle::degrees(thetas[k]).value);
            max_dev = std::max(max_dev, std::abs(est.s - singlet));
            if (thetas[k] == 0.0) {
                s_theta0 = est.s;
            }
        }
        json summary = {{"window_ns", json_real(window)}, {"S", s_rows}, {"max_dev_from_singlet", max_dev}};
        if (s_theta0) {
            summary["S_theta0"] = *s_theta0;
        }
        return summary;
    };
}

inline void prepare_eprb_sweep(ConfigReader& r, Job& job) {
    json params;
    const ChshSettings st = chsh_settings(r, params);
    EprbConfig cfg;
    cfg.a = st.a;
    cfg.a_prime = st.a_prime;
    cfg.b = st.b;
    cfg.b_prime = st.b_prime;
    cfg.t0_ns = r.real("parameters.t0_ns", cfg.t0_ns);
    cfg.pairs = r.count("parameters.pairs", cfg.pairs);
    const auto windows = r.reals("parameters.windows_ns", default_windows());
    const PairingMode mode = pairing(r, params);
    cfg.seed = job.seed;
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(0, e.what());
    }
    for (std::size_t k = 0; k < windows.size(); ++k) {
        if (!(windows[k] >= 0.0) || (k > 0 && !(windows[k] > windows[k - 1]))) {
            throw ConfigError(0, "'parameters.windows_ns' must be non-negative and strictly increasing");
        }
    }
    if (windows.empty()) {
        throw ConfigError(0, "'parameters.windows_ns' must not be empty");
    }
    params["t0_ns"] = cfg.t0_ns;
    params["pairs"] = cfg.pairs;
    params["windows_ns"] = json_reals(windows);
    job.parameters = params;

    job.execute = [=](const Job& j) {
        const auto logs = run_eprb(cfg);
        const auto tables = parallel_map<CoincidenceTable>(windows.size(), j.threads, [&](std::size_t k) {
            return count_coincidences(logs.first, logs.second, windows[k], mode);
        });
        CsvWriter corr(j.out_dir / "correlations.csv", {"W_ns", "alpha1", "alpha2", "E", "n_coinc"});
        for (std::size_t k = 0; k < windows.size(); ++k) {
            for (const auto& [a1, a2] : {std::pair{st.a, st.b}, std::pair{st.a, st.b_prime}, std::pair{st.a_prime, st.b},
                                         std::pair{st.a_prime, st.b_prime}}) {
                const auto c = tables[k].at(a1, a2);
                corr.row({fmt(windows[k]), fmt(a1.value), fmt(a2.value), c.total() ? fmt(correlation(c)) : "nan",
                          fmt(c.total())});
            }
        }
        WindowSweepResult sweep;
        CsvWriter csv(j.out_dir / "sweep.csv", {"W_ns", "S_abs", "sigma", "n_coinc"});
        json rows = json::array();
        for (std::size_t k = 0; k < windows.size(); ++k) {
            const ChshEstimate est = chsh_from_table(tables[k], st);
            sweep.points.push_back({windows[k], std::abs(est.s), est.sigma, est.coincidences});
            csv.row({fmt(windows[k]), fmt(std::abs(est.s)), fmt(est.sigma), fmt(est.coincidences)});
            rows.push_back({{"W_ns", json_real(windows[k])}, {"S_abs", std::abs(est.s)}, {"sigma", est.sigma}});
        }
        const auto crossing = sweep.crossing(2.0);
        return json{{"sweep", rows}, {"crossing_W_ns", crossing ? json_real(*crossing) : json(nullptr)}};
    };
}

inline std::vector<std::pair<double, double>> default_oracle_pairs() {
    return {{0, 22.5}, {0, 67.5}, {45, 22.5}, {45, 67.5}, {0, 0}, {10, 55}, {30, 100}, {-20, 70}};
}

inline void prepare_eprb_oracle(ConfigReader& r, Job& job) {
    const auto pairs = r.real_pairs("parameters.pairs_deg", default_oracle_pairs());
    const auto windows = r.reals("parameters.windows_ns", {0.0, 2.0});
    OracleConfig base;
    base.t0_ns = r.real("parameters.t0_ns", base.t0_ns);
    base.grid_points = static_cast<int>(r.integer("parameters.grid_points", base.grid_points));
    if (pairs.empty() || windows.empty()) {
        throw ConfigError(0, "'parameters.pairs_deg' and 'parameters.windows_ns' must not be empty");
    }
    for (const double w : windows) {
        OracleConfig c = base;
        c.window_ns = w;
        try {
            c.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(0, e.what());
        }
    }
    json pj = json::array();
    for (const auto& [x, y] : pairs) {
        pj.push_back({x, y});
    }
    job.parameters = {{"pairs_deg", pj},
                      {"windows_ns", json_reals(windows)},
                      {"t0_ns", base.t0_ns},
                      {"grid_points", base.grid_points}};

    job.execute = [=](const Job& j) {
        const std::size_t n = pairs.size() * windows.size();
        const auto values = parallel_map<double>(n, j.threads, [&](std::size_t k) {
            OracleConfig c = base;
            c.window_ns = windows[k / pairs.size()];
            const auto& [a1, a2] = pairs[k % pairs.size()];
            return oracle_correlation(Angle::degrees(a1), Angle::degrees(a2), c);
        });
        json rows = json::array();
        double max_dev_limit = 0.0;
        bool has_limit = false;
        for (std::size_t k = 0; k < n; ++k) {
            const double w = windows[k / pairs.size()];
            const Angle a1 = Angle::degrees(pairs[k % pairs.size()].first);
            const Angle a2 = Angle::degrees(pairs[k % pairs.size()].second);
            rows.push_back({{"alpha1", a1.value}, {"alpha2", a2.value}, {"W", json_real(w)}, {"E_oracle", values[k]}});
            if (w == 0.0) {
                has_limit = true;
                max_dev_limit =
                    std::max(max_dev_limit, std::abs(values[k] + std::cos(2.0 * (a1.value - a2.value))));
            }
        }
        write_json(j.out_dir / "oracle.json", rows);
        json summary = {{"rows", n}};
        if (has_limit) {
            summary["max_dev_from_singlet_at_W0"] = max_dev_limit;
        }
        return summary;
    };
}

inline NeutronExperiment neutron_experiment(ConfigReader& r, const Job& job, json& params) {
    NeutronExperiment ex;
    ex.gamma = r.real("parameters.gamma", ex.gamma);
    ex.reflectance = r.real("parameters.reflectance", ex.reflectance);
    ex.particles = r.count("parameters.particles", ex.particles);
    ex.warmup = r.count("parameters.warmup", ex.warmup);
    const auto mode = r.choice("parameters.chi_mode", "fixed", {"fixed", "random"});
    ex.chi_mode = mode == "fixed" ? ChiMode::fixed : ChiMode::per_event_random;
    ex.seed = job.seed;
    ex.threads = job.threads;
    NeutronConfig probe;
    probe.gamma = ex.gamma;
    probe.reflectance = ex.reflectance;
    probe.particles = ex.particles;
    try {
        probe.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(0, e.what());
    }
    params["gamma"] = ex.gamma;
    params["reflectance"] = ex.reflectance;
    params["particles"] = ex.particles;
    params["warmup"] = ex.warmup;
    params["chi_mode"] = mode;
    return ex;
}

inline void write_neutron_points(const std::filesystem::path& path, const std::vector<NeutronPoint>& points) {
    CsvWriter csv(path, {"alpha_rad", "chi_rad", "N", "N_pp", "N_p0", "N_0p", "E"});
    for (const auto& p : points) {
        csv.row({fmt(p.alpha.value), fmt(p.chi.value), fmt(p.n_00), fmt(p.n_pp), fmt(p.n_p0), fmt(p.n_0p), fmt(p.e)});
    }
}

inline void prepare_neutron(ConfigReader& r, Job& job) {
    json params;
    NeutronExperiment ex = neutron_experiment(r, job, params);
    const Angle a = deg(r, params, "alpha_deg", 0.0);
    const Angle ap = deg(r, params, "alpha_prime_deg", 90.0);
    const Angle c = deg(r, params, "chi_deg", 45.0);
    const Angle cp = deg(r, params, "chi_prime_deg", -45.0);
    job.parameters = params;
    job.execute = [=](const Job& j) {
        NeutronExperiment e = ex;
        e.threads = j.threads;
        const NeutronChsh chsh = neutron_chsh(e, a, ap, c, cp);
        write_neutron_points(j.out_dir / "correlations.csv", chsh.points);
        return json{{"S_max", chsh.s}, {"sigma", chsh.sigma}, {"gamma", ex.gamma}};
    };
}

/// Least-squares A in E ~ A cos(alpha + chi).
inline double fit_cosine_amplitude(const std::vector<NeutronPoint>& points) {
    std::vector<double> data;
    std::vector<double> model;
    for (const auto& p : points) {
        data.push_back(p.e);
        model.push_back(std::cos(p.alpha.value + p.chi.value));
    }
    return fit_amplitude(data, model).amplitude;
}

inline void prepare_neutron_grid(ConfigReader& r, Job& job) {
    json params;
    NeutronExperiment ex = neutron_experiment(r, job, params);
    const auto n = r.integer("parameters.grid", 8);
    if (n < 1 || n > 1024) {
        throw ConfigError(0, "'parameters.grid' must lie in [1, 1024]");
    }
    params["grid"] = n;
    job.parameters = params;
    job.execute = [=](const Job& j) {
        NeutronExperiment e = ex;
        e.threads = j.threads;
        const auto points = neutron_correlations(e, neutron_grid(static_cast<int>(n)));
        write_neutron_points(j.out_dir / "grid.csv", points);
        double max_dev = 0.0;
        for (const auto& p : points) {
            max_dev = std::max(max_dev, std::abs(p.e - std::cos(p.alpha.value + p.chi.value)));
        }
        const NeutronChsh chsh = neutron_chsh(e);
        return json{{"gamma", ex.gamma},
                    {"max_dev_from_cos", max_dev},
                    {"A_fit", fit_cosine_amplitude(points)},
                    {"S_max", chsh.s},
                    {"S_max_sigma", chsh.sigma}};
    };
}

} // namespace detail

/// Resolves a config into a Job; throws ConfigError on anything invalid.
inline Job prepare(const ConfigDocument& doc, const RunOptions& opts) {
    ConfigReader r(doc);
    const ConfigValue* exp = r.find("experiment");
    if (exp == nullptr) {
        throw ConfigError(0, "missing 'experiment'");
    }
    std::vector<std::string> names;
    for (const auto& e : experiments()) {
        names.push_back(e.name);
    }
    Job job;
    job.experiment = r.choice("experiment", "", names);
    const std::int64_t seed = r.integer("seed", 1);
    if (seed < 0) {
        throw ConfigError(r.find("seed")->line, "'seed' must be non-negative");
    }
    job.seed = opts.seed.value_or(static_cast<std::uint64_t>(seed));
    const std::string out = r.string("output_dir", "out/" + job.experiment);
    job.out_dir = opts.out_dir.value_or(out);
    job.threads = std::max(1u, opts.threads);

    if (job.experiment == "twobeam") {
        detail::prepare_twobeam(r, job);
    } else if (job.experiment == "eprb") {
        detail::prepare_eprb(r, job);
    } else if (job.experiment == "eprb_sweep") {
        detail::prepare_eprb_sweep(r, job);
    } else if (job.experiment == "eprb_oracle") {
        detail::prepare_eprb_oracle(r, job);
    } else if (job.experiment == "neutron") {
        detail::prepare_neutron(r, job);
    } else {
        detail::prepare_neutron_grid(r, job);
    }
    r.finish();
    return job;
}

/// The full resolved config; `ebsim run manifest.json` repeats the job.
inline json manifest_of(const Job& job) {
    return json{{"tool", "ebsim"},
                {"config",
                 {{"experiment", job.experiment},
                  {"seed", job.seed},
                  {"output_dir", job.out_dir.generic_string()},
                  {"parameters", job.parameters}}}};
}

/// Writes manifest.json first so a failed run still leaves a record.
inline json execute(const Job& job) {
    std::filesystem::create_directories(job.out_dir);
    write_json(job.out_dir / "manifest.json", manifest_of(job));
    json summary = job.execute(job);
    write_json(job.out_dir / "summary.json", summary);
    return summary;
}

} // namespace ebsim::app

#endif // EBSIM_APP_HPP

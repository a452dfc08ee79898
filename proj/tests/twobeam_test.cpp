#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ebsim/analysis.hpp"
#include "ebsim/twobeam.hpp"

using namespace ebsim;

namespace {

// Independent oracle: intersect the ray (0, y) + s (cos b, sin b) with the
// circle x^2 + y^2 = X^2 by bisection on s, then read off the angle.
struct RayHit {
    double theta;
    double distance;
};

RayHit ray_circle(double y, double beta, double radius) {
    auto f = [&](double s) {
        const double px = s * std::cos(beta);
        const double py = y + s * std::sin(beta);
        return px * px + py * py - radius * radius;
    };
    double lo = 0.0;
    double hi = 4.0 * radius;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    const double s = 0.5 * (lo + hi);
    const double px = s * std::cos(beta);
    const double py = y + s * std::sin(beta);
    return {std::atan2(py, px), s};
}

TwoBeamConfig small_config() {
    TwoBeamConfig cfg;
    cfg.events_total = 181'000;
    return cfg;
}

} // namespace

TEST(SampleEmission, SupportIsTheTwoSlits) {
    TwoBeamConfig cfg;
    RngStream rng = make_stream(1, 0);
    int left = 0;
    double beta_sum = 0.0;
    const int n = 1'000'000;
    std::vector<int> hist(10, 0);
    for (int k = 0; k < n; ++k) {
        const Emission e = sample_emission(rng, cfg);
        ASSERT_GE(std::abs(e.y), 2.0);
        ASSERT_LE(std::abs(e.y), 3.0);
        ASSERT_GT(e.beta.value, -kPi / 2.0);
        ASSERT_LT(e.beta.value, kPi / 2.0);
        left += e.y < 0.0 ? 1 : 0;
        beta_sum += e.beta.value;
        ++hist[static_cast<std::size_t>(std::min(9.0, (std::abs(e.y) - 2.0) * 10.0))];
    }
    EXPECT_NEAR(left / static_cast<double>(n), 0.5, 5.0 * 0.5 / std::sqrt(n));
    const double beta_sd = kPi / std::sqrt(12.0);
    EXPECT_LT(std::abs(beta_sum / n), 3.0 * beta_sd / std::sqrt(n));
    for (const int h : hist) {
        EXPECT_NEAR(h, n / 10.0, 5.0 * std::sqrt(n / 10.0));
    }
}

TEST(HitAngle, OnAxisAndCenteredRays) {
    EXPECT_DOUBLE_EQ(hit_angle(0.0, Angle{0.0}, 100.0).value, 0.0);
    EXPECT_NEAR(hit_angle(0.0, Angle{kPi / 6.0}, 100.0).value, kPi / 6.0, 1e-14);
}

TEST(HitAngle, MatchesRayCircleOracle) {
    const RayHit ref = ray_circle(2.5, 0.1, 100.0);
    EXPECT_NEAR(hit_angle(2.5, Angle{0.1}, 100.0).value, ref.theta, 1e-10);
    RngStream rng = make_stream(2, 0);
    for (int k = 0; k < 1000; ++k) {
        const double y = rng.uniform(-3.0, 3.0);
        const double beta = rng.uniform(-1.5, 1.5);
        EXPECT_NEAR(hit_angle(y, Angle{beta}, 100.0).value, ray_circle(y, beta, 100.0).theta, 1e-9);
    }
}

TEST(HitAngle, RejectsSourceOutsideScreen) {
    EXPECT_THROW(hit_angle(100.0, Angle{0.0}, 100.0), InvalidArgument);
    EXPECT_THROW(hit_angle(-120.0, Angle{0.0}, 100.0), InvalidArgument);
}

TEST(FlightTime, Examples) {
    EXPECT_DOUBLE_EQ(flight_time(0.0, Angle{0.3}, 100.0, 1.0), 100.0);
    const double theta = 0.4;
    EXPECT_NEAR(flight_time(100.0 * std::sin(theta), Angle{theta}, 100.0, 1.0), 100.0 * std::cos(theta), 1e-10);
    const RayHit ref = ray_circle(2.5, 0.1, 100.0);
    const Angle th = hit_angle(2.5, Angle{0.1}, 100.0);
    EXPECT_NEAR(flight_time(2.5, th, 100.0, 1.0), ref.distance, 1e-10);
    EXPECT_NEAR(flight_time(2.5, th, 100.0, 2.0), ref.distance / 2.0, 1e-10);
}

TEST(MessageOf, QuarterPeriods) {
    const auto m0 = message_of(0.0, 1.0);
    EXPECT_DOUBLE_EQ(m0.x(), 1.0);
    EXPECT_DOUBLE_EQ(m0.y(), 0.0);
    const auto m1 = message_of(0.25, 1.0);
    EXPECT_NEAR(m1.x(), 0.0, 1e-15);
    EXPECT_NEAR(m1.y(), 1.0, 1e-15);
    const auto m2 = message_of(0.25, 2.0);
    EXPECT_NEAR(m2.x(), -1.0, 1e-15);
    EXPECT_NEAR(m2.y(), 0.0, 1e-15);
}

TEST(DetectorBins, TileTheSemicircle) {
    const int n = 181;
    EXPECT_NEAR(detector_center(90, n).value, 0.0, 1e-15);
    EXPECT_EQ(detector_index(Angle{0.0}, n), 90);
    EXPECT_EQ(detector_index(Angle{-kPi / 2.0}, n), 0);
    EXPECT_EQ(detector_index(Angle{kPi / 2.0}, n), n - 1);
    for (int j = 0; j < n; ++j) {
        EXPECT_EQ(detector_index(detector_center(j, n), n), j);
    }
}

TEST(TwoBeamConfig, Validation) {
    TwoBeamConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.n_detectors = 180;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = TwoBeamConfig{};
    cfg.source_width = 0.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = TwoBeamConfig{};
    cfg.source_separation = 300.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = TwoBeamConfig{};
    cfg.gamma = 1.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(RunTwoBeam, BookkeepingPerMessenger) {
    const auto counts = run_twobeam(small_config());
    EXPECT_EQ(counts.total_arrivals(), 181'000u);
    EXPECT_EQ(counts.emitted, 181'000u);
    for (const auto& b : counts.bins) {
        EXPECT_LE(b.clicks, b.arrivals);
    }
}

TEST(RunTwoBeam, Deterministic) {
    const auto a = run_twobeam(small_config());
    const auto b = run_twobeam(small_config());
    for (std::size_t j = 0; j < a.bins.size(); ++j) {
        EXPECT_EQ(a.bins[j].clicks, b.bins[j].clicks);
        EXPECT_EQ(a.bins[j].arrivals, b.bins[j].arrivals);
    }
}

TEST(RunTwoBeam, MirrorSymmetry) {
    TwoBeamConfig cfg;
    cfg.events_total = 905'000;
    const auto counts = run_twobeam(cfg);
    const int n = cfg.n_detectors;
    for (int j = 0; j < n / 2; ++j) {
        const double l = static_cast<double>(counts.bins[static_cast<std::size_t>(j)].clicks);
        const double r = static_cast<double>(counts.bins[static_cast<std::size_t>(n - 1 - j)].clicks);
        EXPECT_LE(std::abs(l - r), 5.0 * std::sqrt(std::max(l + r, 1.0))) << "bin " << j;
    }
}

TEST(RunTwoBeam, CountersShowNoFringes) {
    TwoBeamConfig cfg;
    cfg.events_total = 905'000;
    cfg.detector = DetectorKind::counter;
    const auto counts = run_twobeam(cfg);
    EXPECT_EQ(counts.total_clicks(), counts.total_arrivals());
    EXPECT_GT(fit_fraunhofer(counts, cfg).rms, 0.5);
}

TEST(RunTwoBeam, SingleSourceHasNoFringes) {
    // Point source at the center: every ray has the same flight time, so
    // each detector sees a constant message and, once warmed up, clicks on
    // every arrival; the profile follows the flat arrival density.
    TwoBeamConfig cfg;
    cfg.source_separation = 0.0;
    cfg.source_width = 1e-9;
    cfg.events_total = 181'000;
    const auto counts = run_twobeam(cfg);
    EXPECT_GT(counts.detected_ratio(), 0.7);
    double mean = 0.0;
    for (const auto& b : counts.bins) {
        mean += static_cast<double>(b.clicks);
    }
    mean /= static_cast<double>(counts.bins.size());
    for (const auto& b : counts.bins) {
        EXPECT_NEAR(static_cast<double>(b.clicks), mean, 6.0 * std::sqrt(mean));
    }
}

TEST(RunTwoBeam, AdaptiveDetectorsReproduceFarField) {
    TwoBeamConfig cfg;
    cfg.events_total = 905'000;
    const auto counts = run_twobeam(cfg);
    EXPECT_LT(fit_fraunhofer(counts, cfg).rms, 0.05);
}

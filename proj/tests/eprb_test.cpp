#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ebsim/analysis.hpp"
#include "ebsim/eprb.hpp"

using namespace ebsim;

TEST(EmitPair, UniformOnCircle) {
    RngStream rng = make_stream(1, 0);
    const int n = 1'000'000;
    const int cells = 36;
    std::vector<int> hist(cells, 0);
    for (int k = 0; k < n; ++k) {
        const double xi = emit_pair(rng).value;
        ASSERT_GE(xi, 0.0);
        ASSERT_LT(xi, kTwoPi);
        ++hist[static_cast<std::size_t>(xi / kTwoPi * cells)];
    }
    double chi2 = 0.0;
    const double expected = static_cast<double>(n) / cells;
    for (const int h : hist) {
        chi2 += (h - expected) * (h - expected) / expected;
    }
    // 35 degrees of freedom; 99.9th percentile is about 66.6.
    EXPECT_LT(chi2, 66.6);
}

TEST(EmitPair, OrthogonalPartners) {
    RngStream rng = make_stream(1, 0);
    for (int k = 0; k < 100; ++k) {
        const Angle xi = emit_pair(rng);
        EXPECT_DOUBLE_EQ(particle_polarization(xi, 2).value - particle_polarization(xi, 1).value, kPi / 2.0);
    }
}

TEST(EmitPair, SameSeedSameSequence) {
    RngStream a = make_stream(9, 0);
    RngStream b = make_stream(9, 0);
    for (int k = 0; k < 100; ++k) {
        EXPECT_EQ(emit_pair(a).value, emit_pair(b).value);
    }
}

TEST(ChooseSetting, FairAndIndependent) {
    RngStream r1 = make_stream(1, 1);
    RngStream r2 = make_stream(1, 2);
    const Angle s0{0.0};
    const Angle s1{1.0};
    const int n = 100'000;
    int first = 0;
    double cross = 0.0;
    for (int k = 0; k < n; ++k) {
        const double u = choose_setting(r1, s0, s1).value == 0.0 ? 1.0 : -1.0;
        const double v = choose_setting(r2, s0, s1).value == 0.0 ? 1.0 : -1.0;
        first += u > 0 ? 1 : 0;
        cross += u * v;
    }
    EXPECT_NEAR(first / static_cast<double>(n), 0.5, 0.01);
    EXPECT_LT(std::abs(cross / n), 0.01);
}

TEST(ChooseSetting, DegenerateSettings) {
    RngStream rng = make_stream(1, 1);
    for (int k = 0; k < 100; ++k) {
        EXPECT_EQ(choose_setting(rng, Angle{0.7}, Angle{0.7}).value, 0.7);
    }
}

TEST(EomRotate, Examples) {
    EXPECT_DOUBLE_EQ(eom_rotate(Angle{0.4}, 1, Angle{0.4}).value, 0.0);
    EXPECT_DOUBLE_EQ(eom_rotate(Angle{0.0}, 2, Angle{kPi / 2.0}).value, 0.0);
    EXPECT_NEAR(eom_rotate(Angle{0.3}, 1, Angle{0.1}).value, 0.2, 1e-15);
}

TEST(PbsOutcome, Extremes) {
    RngStream rng = make_stream(2, 0);
    for (int k = 0; k < 1000; ++k) {
        const double r = rng.uniform();
        EXPECT_EQ(pbs_outcome(Angle{0.0}, r), 1);
        EXPECT_EQ(pbs_outcome(Angle{kPi / 2.0}, r > 0.0 ? r : 0.5), -1);
    }
}

TEST(PbsOutcome, MalusLaw) {
    RngStream rng = make_stream(2, 1);
    const int n = 100'000;
    for (const double xi : {kPi / 3.0, kPi / 8.0, 1.0}) {
        int plus = 0;
        for (int k = 0; k < n; ++k) {
            plus += pbs_outcome(Angle{xi}, rng.uniform()) > 0 ? 1 : 0;
        }
        const double p = std::pow(std::cos(xi), 2);
        EXPECT_NEAR(plus / static_cast<double>(n), p, 5.0 * std::sqrt(p * (1 - p) / n)) << xi;
    }
    int plus = 0;
    for (int k = 0; k < n; ++k) {
        plus += pbs_outcome(Angle{kPi / 3.0}, rng.uniform()) > 0 ? 1 : 0;
    }
    EXPECT_NEAR(plus / static_cast<double>(n), 0.25, 0.01);
}

TEST(TimeTag, Ranges) {
    RngStream rng = make_stream(3, 0);
    const int n = 100'000;
    double sum = 0.0;
    double sum2 = 0.0;
    double max_eighth = 0.0;
    for (int k = 0; k < n; ++k) {
        EXPECT_EQ(time_tag(Angle{0.0}, 2000.0, rng.uniform()), 0.0);
        const double t = time_tag(Angle{kPi / 4.0}, 2000.0, rng.uniform());
        sum += t;
        sum2 += t * t;
        max_eighth = std::max(max_eighth, time_tag(Angle{kPi / 8.0}, 2000.0, rng.uniform()));
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean);
    EXPECT_LT(std::abs(mean - 1000.0), 3.0 * sd / std::sqrt(n));
    EXPECT_LE(max_eighth, 500.0 + 1e-9);
    EXPECT_GT(max_eighth, 490.0);
}

TEST(RunEprb, RangeContract) {
    EprbConfig cfg;
    cfg.pairs = 100'000;
    const auto [log1, log2] = run_eprb(cfg);
    ASSERT_EQ(log1.size(), cfg.pairs);
    ASSERT_EQ(log2.size(), cfg.pairs);
    for (const auto* log : {&log1, &log2}) {
        for (std::size_t n = 0; n < log->size(); ++n) {
            const auto& r = (*log)[n];
            ASSERT_TRUE(r.x == 1 || r.x == -1);
            ASSERT_GE(r.t_ns, 0.0);
            ASSERT_LE(r.t_ns, cfg.t0_ns);
            ASSERT_EQ(r.n, n);
        }
    }
}

TEST(RunEprb, StationOneIgnoresRemoteSettings) {
    EprbConfig cfg;
    cfg.pairs = 100'000;
    const auto first = run_eprb(cfg).first;
    cfg.b = Angle{1.1};
    cfg.b_prime = Angle{-0.4};
    const auto second = run_eprb(cfg).first;
    ASSERT_EQ(first.size(), second.size());
    for (std::size_t k = 0; k < first.size(); ++k) {
        ASSERT_EQ(first[k].x, second[k].x);
        ASSERT_EQ(first[k].t_ns, second[k].t_ns);
        ASSERT_EQ(first[k].alpha.value, second[k].alpha.value);
    }
}

TEST(RunEprb, StreamOffsetSelectsIndependentRun) {
    EprbConfig cfg;
    cfg.pairs = 1000;
    const auto a = run_eprb(cfg).first;
    cfg.stream_offset = 3;
    const auto b = run_eprb(cfg).first;
    int same = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        same += a[k].t_ns == b[k].t_ns ? 1 : 0;
    }
    EXPECT_LT(same, 10);
}

TEST(RunEprb, SinglesAreUnbiasedAndLocal) {
    EprbConfig cfg;
    cfg.pairs = 300'000;
    const auto [log1, log2] = run_eprb(cfg);
    auto check = [](const StationLog& mine, const StationLog& other, Angle s, Angle remote) {
        std::int64_t sum = 0;
        std::uint64_t n = 0;
        for (std::size_t k = 0; k < mine.size(); ++k) {
            if (same_setting(mine[k].alpha, s) && same_setting(other[k].alpha, remote)) {
                sum += mine[k].x;
                ++n;
            }
        }
        const double mean = static_cast<double>(sum) / static_cast<double>(n);
        EXPECT_LT(std::abs(mean), 5.0 / std::sqrt(static_cast<double>(n)));
    };
    for (const Angle a : {cfg.a, cfg.a_prime}) {
        EXPECT_LT(std::abs(singles_average(log1, a)), 5.0 / std::sqrt(cfg.pairs / 2.0));
        for (const Angle b : {cfg.b, cfg.b_prime}) {
            check(log1, log2, a, b);
            check(log2, log1, b, a);
        }
    }
}

TEST(RunEprb, RotationalInvariance) {
    // E at W = 2 ns for (a, b) and (a + d, b + d) agree within statistics.
    auto e_at = [](double a, double b, std::uint64_t seed) {
        EprbConfig cfg;
        cfg.a = cfg.a_prime = Angle{a};
        cfg.b = cfg.b_prime = Angle{b};
        cfg.pairs = 200'000;
        cfg.seed = seed;
        const auto [l1, l2] = run_eprb(cfg);
        const auto c = count_coincidences(l1, l2, 2.0).at(Angle{a}, Angle{b});
        return std::pair{correlation(c), correlation_sigma(c)};
    };
    const auto [e0, s0] = e_at(0.0, kPi / 8.0, 1);
    for (const double d : {0.3, 1.0, 2.2}) {
        const auto [e1, s1] = e_at(d, d + kPi / 8.0, 2);
        EXPECT_LT(std::abs(e1 - e0), 5.0 * std::hypot(s0, s1)) << d;
    }
}

TEST(RunEprb, TimeDifferenceHistogramPeakedWithTails) {
    EprbConfig cfg;
    cfg.pairs = 100'000;
    const auto [log1, log2] = run_eprb(cfg);
    const auto h = timetag_histogram(log1, log2, 10.0);
    EXPECT_EQ(h.mode_index(), static_cast<std::size_t>(h.zero_index()));
    std::uint64_t tail = 0;
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        if (std::abs(static_cast<int>(k) - h.zero_index()) > 5) {
            tail += h.counts[k];
        }
    }
    EXPECT_GT(tail, 0u);
    EXPECT_EQ(h.total(), cfg.pairs);
}

TEST(EprbConfig, Validation) {
    EprbConfig cfg;
    cfg.pairs = 0;
    EXPECT_THROW(run_eprb(cfg), InvalidArgument);
    cfg.pairs = 1;
    cfg.t0_ns = 0.0;
    EXPECT_THROW(run_eprb(cfg), InvalidArgument);
}

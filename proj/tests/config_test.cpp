#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "ebsim/app.hpp"
#include "ebsim/config.hpp"

using namespace ebsim;

namespace {

int error_line(const std::string& text) {
    try {
        ConfigDocument::parse(text);
    } catch (const ConfigError& e) {
        return e.line;
    }
    return -1;
}

int prepare_error_line(const std::string& text) {
    try {
        app::prepare(ConfigDocument::parse(text), {});
    } catch (const ConfigError& e) {
        return e.line;
    }
    return -1;
}

std::string prepare_error(const std::string& text) {
    try {
        app::prepare(ConfigDocument::parse(text), {});
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(ConfigParse, ScalarsTablesAndArrays) {
    const auto doc = ConfigDocument::parse(R"(# comment
experiment = "eprb"   # trailing
seed = 42

[parameters]
pairs = 300_000
window_ns = 2.5
flag = true
theta_deg = [0, 22.5,
             -45, 1e2]   # continues
windows = [1, inf, -inf]
pairs_deg = [[0, 22.5], [45, 67.5],]
name = "a \"quoted\" word"

[a.b]
c = -3
)");
    const auto& v = doc.values();
    EXPECT_EQ(v.at("experiment").s, "eprb");
    EXPECT_EQ(v.at("seed").i, 42);
    EXPECT_EQ(v.at("parameters.pairs").i, 300000);
    EXPECT_DOUBLE_EQ(v.at("parameters.window_ns").d, 2.5);
    EXPECT_TRUE(v.at("parameters.flag").b);
    ASSERT_EQ(v.at("parameters.theta_deg").items.size(), 4u);
    EXPECT_DOUBLE_EQ(v.at("parameters.theta_deg").items[3].d, 100.0);
    EXPECT_TRUE(std::isinf(v.at("parameters.windows").items[1].d));
    EXPECT_LT(v.at("parameters.windows").items[2].d, 0.0);
    EXPECT_EQ(v.at("parameters.pairs_deg").items.size(), 2u);
    EXPECT_EQ(v.at("parameters.name").s, "a \"quoted\" word");
    EXPECT_EQ(v.at("a.b.c").i, -3);
    EXPECT_EQ(v.at("parameters.theta_deg").line, 9);
}

TEST(ConfigParse, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line("a = 1\nb = \n"), 2);
    EXPECT_EQ(error_line("a = 1\n\nb = \"open\n"), 3);
    EXPECT_EQ(error_line("a = 1\na = 2\n"), 2);
    EXPECT_EQ(error_line("[t]\nx = 1\n[t]\n"), 3);
    EXPECT_EQ(error_line("just text\n"), 1);
    EXPECT_EQ(error_line("x = 1.2.3\n"), 1);
    EXPECT_EQ(error_line("x = [1, 2\ny = 3\n"), 1);
    EXPECT_EQ(error_line("x = 1 2\n"), 1);
    EXPECT_EQ(error_line("bad key = 1\n"), 1);
    EXPECT_EQ(error_line("[unterminated\n"), 1);
    EXPECT_EQ(error_line("x = 1__0\n"), 1);
}

TEST(ConfigReader, UnknownKeysRejectedWithLine) {
    EXPECT_EQ(prepare_error_line("experiment = \"twobeam\"\n[parameters]\ngamma = 0.9\ngamma_typo = 1\n"), 4);
    EXPECT_EQ(prepare_error_line("experiment = \"twobeam\"\ncolour = 1\n"), 2);
}

TEST(ConfigReader, TypeErrorsReportLine) {
    EXPECT_EQ(prepare_error_line("experiment = \"twobeam\"\n[parameters]\ngamma = \"high\"\n"), 3);
    EXPECT_EQ(prepare_error_line("experiment = \"eprb\"\n[parameters]\npairs = 2.5\n"), 3);
    EXPECT_EQ(prepare_error_line("experiment = \"eprb\"\n[parameters]\npairs = -4\n"), 3);
}

TEST(ConfigReader, UnknownExperimentListsValidSet) {
    const std::string msg = prepare_error("experiment = \"laser\"\n");
    for (const auto& e : app::experiments()) {
        EXPECT_NE(msg.find(e.name), std::string::npos) << msg;
    }
    EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
    EXPECT_FALSE(prepare_error("seed = 3\n").empty());
}

TEST(ConfigReader, InvalidValuesRejectedBeforeRunning) {
    EXPECT_FALSE(prepare_error("experiment = \"twobeam\"\n[parameters]\ngamma = 1.5\n").empty());
    EXPECT_FALSE(prepare_error("experiment = \"twobeam\"\n[parameters]\ndetector = \"camera\"\n").empty());
    EXPECT_FALSE(prepare_error("experiment = \"eprb_sweep\"\n[parameters]\nwindows_ns = [5, 2]\n").empty());
    EXPECT_FALSE(prepare_error("experiment = \"eprb_oracle\"\n[parameters]\npairs_deg = [[1, 2, 3]]\n").empty());
    EXPECT_FALSE(prepare_error("experiment = \"neutron_grid\"\n[parameters]\nreflectance = 0\n").empty());
}

TEST(ConfigReader, CommandLineOverrides) {
    app::RunOptions opts;
    opts.seed = 99;
    opts.out_dir = "elsewhere";
    opts.threads = 3;
    const auto job = app::prepare(ConfigDocument::parse("experiment = \"neutron\"\nseed = 5\noutput_dir = \"x\"\n"), opts);
    EXPECT_EQ(job.seed, 99u);
    EXPECT_EQ(job.out_dir, std::filesystem::path("elsewhere"));
    EXPECT_EQ(job.threads, 3u);
}

TEST(ConfigReader, ManifestRoundTrip) {
    const auto job = app::prepare(ConfigDocument::parse(R"(experiment = "eprb_sweep"
seed = 7
[parameters]
pairs = 1000
windows_ns = [1, 10, inf]
)"),
                                  {});
    const auto manifest = app::manifest_of(job);
    ConfigDocument doc;
    app::detail::flatten_json(doc, nlohmann::json::parse(manifest.dump())["config"], "");
    const auto again = app::prepare(doc, {});
    EXPECT_EQ(app::manifest_of(again).dump(), manifest.dump());
    EXPECT_EQ(again.seed, 7u);
}

TEST(Format, NineSignificantDigits) {
    EXPECT_EQ(app::fmt(1.0 / 3.0), "0.333333333");
    EXPECT_EQ(app::fmt(123456789012.0), "1.23456789e+11");
    EXPECT_EQ(app::fmt(kInfiniteWindow), "inf");
    EXPECT_EQ(app::fmt(std::uint64_t{42}), "42");
}

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli_app.hpp"
#include "test_support.hpp"

using namespace gcb;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "gcbcoint");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes the simulated sample in the layout of the published budget sheet plus an SOI file.
struct Inputs {
    fs::path dir, gcb, soi, data, scenario;
};

Inputs write_inputs(const std::string& name) {
    Inputs in;
    in.dir = testutil::scratch_dir(name);
    const auto d = testutil::simulated_dataset(80);
    in.gcb = in.dir / "gcb.csv";
    in.soi = in.dir / "soi.csv";
    in.data = in.dir / "dataset.csv";
    in.scenario = in.dir / "scenario.csv";
    {
        std::ofstream os(in.gcb);
        os << "Year,fossil emissions excluding carbonation,land-use change emissions,atmospheric growth,"
              "ocean sink,land sink,cement carbonation sink\n";
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double growth = i == 0 ? 2.0 : d.concentration[i] - d.concentration[i - 1];
            os << d.years[i] << ',' << csv::exact(d.emissions[i]) << ",0," << csv::exact(growth) << ','
               << csv::exact(d.ocean_sink[i]) << ',' << csv::exact(d.land_sink[i]) << ",0\n";
        }
    }
    {
        std::ofstream os(in.soi);
        for (std::size_t i = 0; i < d.size(); ++i) os << d.years[i] << ',' << csv::exact(d.soi[i]) << '\n';
    }
    ingest::write_canonical(in.data.string(), d);
    {
        std::ofstream os(in.scenario);
        os << "year,emissions\n";
        double e = d.emissions.back();
        for (int y = 2023; y <= 2100; ++y) os << y << ',' << (e += 0.2) << '\n';
    }
    return in;
}

}  // namespace

TEST(Cli, NoSubcommandIsUsageError) { EXPECT_EQ(run_cli({}).code, 2); }

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run_cli({"--help"}).code, 0); }

TEST(Cli, MissingSoiFileIsDataError) {
    const auto in = write_inputs("cli_missing_soi");
    const auto r = run_cli({"rank-test", "--gcb", in.gcb.string(), "--soi", (in.dir / "nope.csv").string(),
                            "--out-dir", in.dir.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("nope.csv"), std::string::npos) << r.err;
}

TEST(Cli, IngestWritesCanonicalDataset) {
    const auto in = write_inputs("cli_ingest");
    const auto out = in.dir / "out";
    const auto r = run_cli({"ingest", "--gcb", in.gcb.string(), "--soi", in.soi.string(), "--out-dir", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto d = ingest::read_canonical((out / "dataset.csv").string());
    const auto ref = ingest::read_canonical(in.data.string());
    ASSERT_EQ(d.size(), 64u);
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_NEAR(d.concentration[i], ref.concentration[i], 1e-5);
        EXPECT_NEAR(d.emissions[i], ref.emissions[i], 1e-6);
    }
}

TEST(Cli, RankTestTextAndJson) {
    const auto in = write_inputs("cli_rank");
    const auto text = run_cli({"rank-test", "--data", in.data.string(), "--out-dir", in.dir.string()});
    ASSERT_EQ(text.code, 0) << text.err;
    EXPECT_NE(text.out.find("selected rank:"), std::string::npos);
    EXPECT_NE(text.out.find("With SOI, k=1 lag"), std::string::npos);

    const auto js = run_cli({"rank-test", "--data", in.data.string(), "--out-dir", in.dir.string(), "--json"});
    ASSERT_EQ(js.code, 0);
    const auto j = nlohmann::json::parse(js.out);
    ASSERT_EQ(j.size(), 4u);
    for (const auto& spec : j) {
        EXPECT_TRUE(spec.contains("selected_rank"));
        ASSERT_EQ(spec.at("rows").size(), 4u);
        EXPECT_GE(spec["rows"][0].at("trace").get<double>(), spec["rows"][3].at("trace").get<double>());
    }
    EXPECT_TRUE(fs::exists(in.dir / "rank_test.json"));
}

TEST(Cli, FitBenchmarkAndRestricted) {
    const auto in = write_inputs("cli_fit");
    const auto b = run_cli({"fit", "--model", "benchmark", "--data", in.data.string(), "--out-dir", in.dir.string()});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_NE(b.out.find("free parameters = 39"), std::string::npos);
    EXPECT_TRUE(fs::exists(in.dir / "residuals_benchmark.csv"));

    const auto r = run_cli({"fit", "--data", in.data.string(), "--out-dir", in.dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("Standard error"), std::string::npos);
    EXPECT_NE(r.out.find("df 28"), std::string::npos);
    const auto j = io::read_json_file((in.dir / "fit_restricted.json").string());
    EXPECT_EQ(j.at("T").get<int>(), 62);
    EXPECT_EQ(j.at("lr_vs_benchmark").at("df").get<int>(), 28);
    EXPECT_TRUE(fs::exists(in.dir / "residuals_restricted.csv"));
    const auto fitted = slurp(in.dir / "fitted_differences.csv");
    EXPECT_EQ(std::count(fitted.begin(), fitted.end(), '\n'), 63);
    const auto plot = slurp(in.dir / "plot_fitted_differences.csv");
    EXPECT_EQ(plot.rfind("variable,year,series,value\n", 0), 0u);
}

TEST(Cli, TestCommand) {
    const auto in = write_inputs("cli_test");
    const auto all = run_cli({"test", "--data", in.data.string(), "--out-dir", in.dir.string()});
    ASSERT_EQ(all.code, 0) << all.err;
    EXPECT_NE(all.out.find("Weak exogeneity"), std::string::npos);
    const auto one = run_cli({"test", "--data", in.data.string(), "--variable", "C", "--which", "exclusion", "--json",
                              "--out-dir", in.dir.string()});
    ASSERT_EQ(one.code, 0);
    const auto j = nlohmann::json::parse(one.out);
    ASSERT_EQ(j.size(), 1u);
    EXPECT_EQ(j[0].at("exclusion").at("df").get<int>(), 3);
    EXPECT_FALSE(j[0].contains("weak_exogeneity"));
}

TEST(Cli, UnknownVariableIsUsageError) {
    const auto in = write_inputs("cli_badvar");
    const auto r = run_cli({"test", "--data", in.data.string(), "--variable", "X", "--out-dir", in.dir.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("unknown variable"), std::string::npos);
}

TEST(Cli, DiagnoseTables) {
    const auto in = write_inputs("cli_diag");
    const auto r = run_cli({"diagnose", "--all-specs", "--data", in.data.string(), "--out-dir", in.dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("No SOI, k=0 lags"), std::string::npos);
    EXPECT_NE(r.out.find("System"), std::string::npos);
    const auto rr = run_cli({"diagnose", "--data", in.data.string(), "--out-dir", in.dir.string()});
    ASSERT_EQ(rr.code, 0) << rr.err;
    EXPECT_NE(rr.out.find("Restricted model"), std::string::npos);
}

TEST(Cli, DiagnoseEmptyResidualsIsUsageError) {
    const auto dir = testutil::scratch_dir("cli_empty");
    std::ofstream(dir / "res.csv") << "year,u_sL,u_sO,u_E,u_C\n";
    const auto r = run_cli({"diagnose", "--residuals", (dir / "res.csv").string(), "--out-dir", dir.string()});
    EXPECT_EQ(r.code, 2);
}

TEST(Cli, ProjectIsDeterministicAndOrdered) {
    const auto in = write_inputs("cli_project");
    const auto fit = run_cli({"fit", "--data", in.data.string(), "--out-dir", in.dir.string()});
    ASSERT_EQ(fit.code, 0) << fit.err;
    const std::vector<std::string> base{"project",     "--fit",    (in.dir / "fit_restricted.json").string(),
                                        "--scenario",  in.scenario.string(), "--n-paths", "2000",
                                        "--seed",      "42"};
    auto a = base;
    a.insert(a.end(), {"--out-dir", (in.dir / "a").string()});
    auto b = base;
    b.insert(b.end(), {"--out-dir", (in.dir / "b").string(), "--workers", "4", "--json"});
    const auto ra = run_cli(a);
    const auto rb = run_cli(b);
    ASSERT_EQ(ra.code, 0) << ra.err;
    ASSERT_EQ(rb.code, 0) << rb.err;
    for (const char* level : {"none", "low", "high"}) {
        for (const char* v : {"sL", "sO", "E", "C"}) {
            const auto name = std::string("fan_") + level + "_" + v + ".csv";
            ASSERT_TRUE(fs::exists(in.dir / "a" / name)) << name;
            EXPECT_EQ(slurp(in.dir / "a" / name), slurp(in.dir / "b" / name)) << name;
        }
    }
    const auto meta = nlohmann::json::parse(rb.out);
    ASSERT_EQ(meta.at("runs").size(), 3u);
    const double none = meta["runs"][0]["C_last"][1], low = meta["runs"][1]["C_last"][1],
                 high = meta["runs"][2]["C_last"][1];
    EXPECT_LT(none, low);
    EXPECT_LT(low, high);
}

TEST(Cli, ConstantScenarioWithoutShocksGivesDegenerateFan) {
    const auto in = write_inputs("cli_flat");
    ASSERT_EQ(run_cli({"fit", "--data", in.data.string(), "--out-dir", in.dir.string()}).code, 0);
    const auto d = ingest::read_canonical(in.data.string());
    {
        std::ofstream os(in.dir / "flat.csv");
        for (int y = 2023; y <= 2100; ++y) os << y << ',' << csv::exact(d.emissions.back()) << '\n';
    }
    const auto r = run_cli({"project", "--fit", (in.dir / "fit_restricted.json").string(), "--scenario",
                            (in.dir / "flat.csv").string(), "--shocks", "off", "--feedback", "none", "--n-paths",
                            "20", "--out-dir", in.dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream fan(in.dir / "fan_none_C.csv");
    std::string line;
    std::getline(fan, line);
    while (std::getline(fan, line)) {
        std::stringstream ss(line);
        std::string year, lo, mid, hi;
        std::getline(ss, year, ',');
        std::getline(ss, lo, ',');
        std::getline(ss, mid, ',');
        std::getline(ss, hi, ',');
        EXPECT_EQ(lo, mid);
        EXPECT_EQ(mid, hi);
    }
}

TEST(Cli, ConfigFileWithFlagOverride) {
    const auto in = write_inputs("cli_config");
    const auto cfg = in.dir / "run.json";
    {
        std::ofstream os(cfg);
        os << nlohmann::json{{"gcb", "gcb.csv"},
                             {"soi", "soi.csv"},
                             {"scenario", "scenario.csv"},
                             {"n_paths", 500},
                             {"seed", 7},
                             {"feedback", {"none", "high"}},
                             {"out_dir", "cfg_out"}}
                  .dump();
    }
    // ingest -> project (fitting on the fly) from the same config.
    ASSERT_EQ(run_cli({"ingest", "--config", cfg.string()}).code, 0);
    EXPECT_TRUE(fs::exists(in.dir / "cfg_out" / "dataset.csv"));
    const auto r = run_cli({"project", "--config", cfg.string(), "--seed", "9", "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto meta = nlohmann::json::parse(r.out);
    EXPECT_EQ(meta.at("seed").get<int>(), 9);
    EXPECT_EQ(meta.at("n_paths").get<int>(), 500);
    EXPECT_EQ(meta.at("runs").size(), 2u);
    EXPECT_TRUE(fs::exists(in.dir / "cfg_out" / "fan_high_C.csv"));
    EXPECT_TRUE(fs::exists(in.dir / "cfg_out" / "plot_projection.csv"));
}

TEST(Cli, OverlayAppearsInPlotData) {
    const auto in = write_inputs("cli_overlay");
    ASSERT_EQ(run_cli({"fit", "--data", in.data.string(), "--out-dir", in.dir.string()}).code, 0);
    std::ofstream(in.dir / "overlay.csv") << "year,C\n2050,1200\n2100,1500\n";
    const auto r = run_cli({"project", "--fit", (in.dir / "fit_restricted.json").string(), "--scenario",
                            in.scenario.string(), "--n-paths", "100", "--overlay", (in.dir / "overlay.csv").string(),
                            "--out-dir", in.dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(slurp(in.dir / "plot_projection.csv").find("C,2100,overlay,1500.000000"), std::string::npos);
}

TEST(Cli, BinaryRuns) {
    const auto r = std::system((std::string(GCBCOINT_CLI_PATH) + " --help > /dev/null").c_str());
    EXPECT_EQ(r, 0);
}

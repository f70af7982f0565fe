#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "test_support.hpp"

using namespace gcb;

namespace {

const char* kGcbHeader =
    "Year,fossil emissions excluding carbonation,land-use change emissions,atmospheric growth,ocean sink,land sink,"
    "cement carbonation sink,budget imbalance";

// Synthetic budget sheet with `n` rows from 1959.
std::string gcb_text(int n, int first = 1959) {
    std::ostringstream os;
    os << kGcbHeader << '\n';
    for (int i = 0; i < n; ++i) {
        os << first + i << ',' << 2.4 + 0.1 * i << ',' << 1.5 << ',' << 2.0 + 0.05 * i << ',' << 1.0 + 0.02 * i << ','
           << 1.2 + 0.03 * i << ',' << 0.01 * i << ",0.1\n";
    }
    return os.str();
}

csv::Table table_of(const std::string& text, bool header = true) {
    std::istringstream is(text);
    return csv::read_stream(is, header);
}

std::string soi_text(int first, int last, double v = 0.0) {
    std::ostringstream os;
    os << "year,soi\n";
    for (int y = first; y <= last; ++y) {
        os << y << ',' << v << '\n';
    }
    return os.str();
}

}  // namespace

TEST(LoadGcb, WellFormedFilePassesThrough) {
    const auto raw = ingest::parse_gcb(table_of(gcb_text(64)));
    ASSERT_EQ(raw.size(), 64u);
    EXPECT_EQ(raw.years.front(), 1959);
    EXPECT_EQ(raw.years.back(), 2022);
    EXPECT_DOUBLE_EQ(raw.fossil[3], 2.4 + 0.3);
    EXPECT_DOUBLE_EQ(raw.land_sink[0], 1.2);
}

TEST(LoadGcb, MissingOceanSinkColumnNamesIt) {
    const std::string text = "Year,fossil emissions excluding carbonation,land-use change emissions,"
                             "atmospheric growth,land sink,cement carbonation sink\n1959,1,1,1,1,0\n";
    try {
        (void)ingest::parse_gcb(table_of(text));
        FAIL() << "expected a schema error";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("ocean sink"), std::string::npos);
    }
}

TEST(LoadGcb, NonNumericCellReportsRowAndColumn) {
    std::string text = gcb_text(3);
    text.replace(text.find("1.5"), 3, "abc");
    try {
        (void)ingest::parse_gcb(table_of(text));
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 2u);
        EXPECT_EQ(e.column(), 3u);
    }
}

TEST(LoadGcb, MissingFileIsSchemaError) { EXPECT_THROW((void)ingest::load_gcb("/nonexistent/gcb.csv"), Error); }

TEST(ComposeEmissions, DirectSum) {
    ingest::GcbTable t;
    t.years = {2000};
    t.fossil = {10.0};
    t.land_use = {1.5};
    t.cement_carbonation = {0.4};
    EXPECT_NEAR(ingest::compose_emissions(t)[0], 11.1, 1e-12);
}

TEST(ComposeEmissions, ZeroComponentsGiveZero) {
    ingest::GcbTable t;
    t.fossil = {0.0, 0.0};
    t.land_use = {0.0, 0.0};
    t.cement_carbonation = {0.0, 0.0};
    for (double e : ingest::compose_emissions(t)) {
        EXPECT_EQ(e, 0.0);
    }
}

TEST(ComposeEmissions, IsLinear) {
    auto t = ingest::parse_gcb(table_of(gcb_text(10)));
    const auto e1 = ingest::compose_emissions(t);
    for (auto* col : {&t.fossil, &t.land_use, &t.cement_carbonation}) {
        for (auto& v : *col) v *= 2.0;
    }
    const auto e2 = ingest::compose_emissions(t);
    for (std::size_t i = 0; i < e1.size(); ++i) {
        EXPECT_EQ(e2[i], 2.0 * e1[i]);
    }
}

TEST(ComposeEmissions, LengthMismatchIsAlignmentError) {
    ingest::GcbTable t;
    t.fossil = {1.0, 2.0};
    t.land_use = {1.0};
    t.cement_carbonation = {0.0, 0.0};
    EXPECT_THROW((void)ingest::compose_emissions(t), AlignmentError);
}

TEST(BuildConcentration, ZeroGrowthIsConstant) {
    ingest::GcbTable t;
    t.years = {1959, 1960, 1961};
    t.atmospheric_growth = {0.0, 0.0, 0.0};
    for (double c : ingest::build_concentration(t)) {
        EXPECT_EQ(c, 670.0);
    }
}

TEST(BuildConcentration, CumulativeSum) {
    ingest::GcbTable t;
    t.years = {1959, 1960, 1961};
    t.atmospheric_growth = {1.0, 2.0, 3.0};
    const auto c = ingest::build_concentration(t);
    EXPECT_EQ(c, (std::vector<double>{670.0, 672.0, 675.0}));
}

TEST(BuildConcentration, DifferencesEqualGrowthExactly) {
    const auto t = ingest::parse_gcb(table_of(gcb_text(64)));
    const auto c = ingest::build_concentration(t);
    for (std::size_t i = 1; i < c.size(); ++i) {
        EXPECT_EQ(c[i] - c[i - 1], (c[i - 1] + t.atmospheric_growth[i]) - c[i - 1]);
        EXPECT_NEAR(c[i] - c[i - 1], t.atmospheric_growth[i], 1e-12);
    }
}

TEST(BuildConcentration, MissingGrowthIsAlignmentError) {
    ingest::GcbTable t;
    t.years = {1959, 1960};
    t.atmospheric_growth = {1.0, std::nan("")};
    EXPECT_THROW((void)ingest::build_concentration(t), AlignmentError);
}

TEST(LoadSoi, ConstantZeroFile) {
    const auto s = ingest::parse_soi(table_of(soi_text(1959, 2022), false), 1959, 2022);
    ASSERT_EQ(s.values.size(), 64u);
    for (double v : s.values) EXPECT_EQ(v, 0.0);
}

TEST(LoadSoi, FileStartingLateIsAlignmentError) {
    EXPECT_THROW((void)ingest::parse_soi(table_of(soi_text(1960, 2022), false), 1959, 2022), AlignmentError);
}

TEST(LoadSoi, GapIsAlignmentError) {
    std::string text = soi_text(1959, 2022);
    const auto pos = text.find("1990,");
    text.erase(pos, text.find('\n', pos) - pos + 1);
    EXPECT_THROW((void)ingest::parse_soi(table_of(text, false), 1959, 2022), AlignmentError);
}

TEST(LoadSoi, MonthlyRowsAreCalendarMeans) {
    std::ostringstream os;
    for (int y = 2000; y <= 2001; ++y) {
        os << y;
        for (int m = 1; m <= 12; ++m) os << ',' << m;
        os << '\n';
    }
    const auto s = ingest::parse_soi(table_of(os.str(), false), 2000, 2001);
    EXPECT_DOUBLE_EQ(s.values[0], 6.5);
}

TEST(LoadSoi, SentinelIsMissing) {
    std::string text = soi_text(2000, 2002, 0.5);
    text.replace(text.find("2001,0.5"), 8, "2001,-99.9");
    EXPECT_THROW((void)ingest::parse_soi(table_of(text, false), 2000, 2002), AlignmentError);
}

TEST(LoadScenario, ConstantScenarioIsValid) {
    std::ostringstream os;
    os << "year,E\n";
    for (int y = 2023; y <= 2100; ++y) os << y << ",11.098\n";
    const auto s = ingest::parse_scenario(table_of(os.str()), "flat", 2023);
    EXPECT_EQ(s.years.size(), 78u);
    EXPECT_EQ(s.emissions.back(), 11.098);
    const auto drift = proj::build_drift(s, 11.098);
    for (double d : drift.d) EXPECT_EQ(d, 0.0);
}

TEST(LoadScenario, GapIsScenarioAlignmentError) {
    std::ostringstream os;
    for (int y = 2023; y <= 2100; ++y) {
        if (y != 2035) os << y << ",10\n";
    }
    EXPECT_THROW((void)ingest::parse_scenario(table_of(os.str(), false), "gap", 2023), ScenarioAlignmentError);
}

TEST(LoadScenario, WrongStartIsScenarioAlignmentError) {
    std::ostringstream os;
    for (int y = 2024; y <= 2100; ++y) os << y << ",10\n";
    EXPECT_THROW((void)ingest::parse_scenario(table_of(os.str(), false), "late", 2023), ScenarioAlignmentError);
}

TEST(LoadScenario, GtCo2RowsAreConverted) {
    const std::string text = "2023,36.64,GtCO2\n2024,10\n";
    const auto s = ingest::parse_scenario(table_of(text, false), "mixed", 2023);
    EXPECT_NEAR(s.emissions[0], 10.0, 1e-12);
    EXPECT_EQ(s.emissions[1], 10.0);
    const auto all = ingest::parse_scenario(table_of("2023,3.664\n", false), "gt", 2023, ingest::EmissionUnit::GtCO2);
    EXPECT_NEAR(all.emissions[0], 1.0, 1e-12);
}

TEST(Align, BuildsValidDataset) {
    const auto raw = ingest::parse_gcb(table_of(gcb_text(64)));
    const auto soi = ingest::parse_soi(table_of(soi_text(1959, 2022, 0.25), false), 1959, 2022);
    const auto d = ingest::align(raw, soi, 1959, 2022);
    EXPECT_EQ(d.size(), 64u);
    EXPECT_EQ(d.concentration.front(), 670.0);
    EXPECT_NEAR(d.emissions[0], 2.4 + 1.5, 1e-12);
    EXPECT_TRUE(ingest::validate(d).ok());
}

TEST(Align, ShortBudgetFileIsAlignmentError) {
    const auto raw = ingest::parse_gcb(table_of(gcb_text(30)));
    const auto soi = ingest::parse_soi(table_of(soi_text(1959, 2022), false), 1959, 2022);
    EXPECT_THROW((void)ingest::align(raw, soi, 1959, 2022), AlignmentError);
}

TEST(Validate, FlagsDecreasingConcentration) {
    auto d = testutil::simulated_dataset(3);
    d.concentration[10] = d.concentration[9] - 1.0;
    const auto report = ingest::validate(d);
    EXPECT_FALSE(report.ok());
}

TEST(Canonical, RoundTripIsBitExact) {
    auto d = testutil::simulated_dataset(5);
    // The canonical format carries 6 decimals; round once so the data are representable.
    for (auto* col : {&d.land_sink, &d.ocean_sink, &d.emissions, &d.concentration, &d.soi}) {
        for (auto& v : *col) v = std::stod(csv::fixed(v));
    }
    std::stringstream ss;
    ingest::write_canonical(ss, d);
    const auto back = ingest::read_canonical(ss);
    EXPECT_EQ(back, d);

    const auto path = testutil::scratch_dir("roundtrip") / "d.csv";
    ingest::write_canonical(path.string(), back);
    EXPECT_EQ(ingest::read_canonical(path.string()), d);
}

TEST(Canonical, HeaderIsFixed) {
    std::stringstream ss;
    ingest::write_canonical(ss, testutil::simulated_dataset(1, 5));
    std::string first;
    std::getline(ss, first);
    EXPECT_EQ(first, ingest::kCanonicalHeader);
}

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace gcb;

namespace {

const std::vector<double> kJbSample{1.2, -0.7, 3.1, 0.4, -2.2, 0.9, 1.7, -0.3, 2.5, -1.1};
const std::vector<double> kLbSample{0.5, 1.9, -0.4, 2.2, 0.1, -1.3, 0.8, 1.4, -0.6, 0.3, 2.0, -0.9};

MatrixXd hosking_sample() {
    const double v[20][2] = {{2.041, -2.556}, {0.418, -0.568}, {-0.453, -0.216}, {-2.02, -0.232}, {-0.865, 3.323},
                             {0.226, -0.353}, {-0.281, -0.668}, {-1.055, -0.391}, {0.482, -0.239}, {0.958, -0.2},
                             {0.024, 1.546},  {0.545, -0.505}, {-0.183, 0.541},  {1.935, -0.27},  {-0.244, 1.002},
                             {-0.886, -0.292}, {0.883, 0.58},  {0.092, 0.67},    {-2.828, 1.021}, {-0.96, -1.669}};
    MatrixXd u(20, 2);
    for (int i = 0; i < 20; ++i) {
        u(i, 0) = v[i][0];
        u(i, 1) = v[i][1];
    }
    return u;
}

MatrixXd gaussian(std::mt19937_64& rng, int T, int p) {
    std::normal_distribution<double> z(0.0, 1.0);
    MatrixXd u(T, p);
    for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = z(rng);
    return u;
}

}  // namespace

TEST(Univariate, JarqueBeraReferenceValues) {
    EXPECT_NEAR(diag::skewness(kJbSample), -0.0519598069780497, 1e-12);
    EXPECT_NEAR(diag::kurtosis(kJbSample), 2.05854046816575, 1e-12);
    const auto jb = diag::jarque_bera(kJbSample);
    EXPECT_NEAR(jb.statistic, 0.373810556769313, 1e-12);
    EXPECT_NEAR(jb.p_value, 0.829522306357029, 1e-10);
    EXPECT_EQ(jb.df, 2);
}

TEST(Univariate, LjungBoxReferenceValues) {
    const auto lb = diag::ljung_box(kLbSample, 2);
    EXPECT_NEAR(lb.statistic, 3.55791333982071, 1e-11);
    EXPECT_NEAR(lb.p_value, 0.16881418433832, 1e-10);
}

TEST(Univariate, LjungBoxMatchesBruteForce) {
    const auto& x = kLbSample;
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v / n;
    double c0 = 0.0;
    for (double v : x) c0 += (v - mean) * (v - mean);
    double q = 0.0;
    for (std::size_t j = 1; j <= 4; ++j) {
        double cj = 0.0;
        for (std::size_t t = j; t < x.size(); ++t) cj += (x[t] - mean) * (x[t - j] - mean);
        q += (cj / c0) * (cj / c0) / (n - static_cast<double>(j));
    }
    EXPECT_NEAR(diag::ljung_box(x, 4).statistic, n * (n + 2) * q, 1e-12);
}

TEST(Univariate, LjungBoxZeroLags) {
    const auto lb = diag::ljung_box(kLbSample, 0);
    EXPECT_EQ(lb.statistic, 0.0);
    EXPECT_EQ(lb.p_value, 1.0);
}

TEST(Univariate, StdDevUsesUnbiasedDivisor) {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    EXPECT_NEAR(diag::std_dev(x), std::sqrt(5.0 / 3.0), 1e-15);
}

TEST(Univariate, AffineInvariance) {
    std::vector<double> y;
    for (double v : kLbSample) y.push_back(-3.0 + 2.5 * v);
    EXPECT_NEAR(diag::jarque_bera(y).statistic, diag::jarque_bera(kLbSample).statistic, 1e-10);
    EXPECT_NEAR(diag::ljung_box(y, 3).statistic, diag::ljung_box(kLbSample, 3).statistic, 1e-10);
}

TEST(Univariate, ZeroVarianceIsDegenerate) {
    const std::vector<double> x(20, 1.5);
    EXPECT_THROW((void)diag::skewness(x), DegenerateInputError);
    EXPECT_THROW((void)diag::jarque_bera(x), DegenerateInputError);
    EXPECT_THROW((void)diag::ljung_box(x, 2), DegenerateInputError);
}

TEST(Univariate, TooManyLagsIsDomainError) { EXPECT_THROW((void)diag::ljung_box(kLbSample, 6), DomainError); }

TEST(System, HoskingReferenceValue) {
    const auto q = diag::system_portmanteau(hosking_sample(), 3);
    EXPECT_NEAR(q.statistic, 4.03230126434277, 1e-10);
    EXPECT_EQ(q.df, 12);
    EXPECT_NEAR(q.p_value, 0.982846439264836, 1e-10);
}

TEST(System, HoskingFittedLagCorrection) {
    const auto q = diag::system_portmanteau(hosking_sample(), 3, 1);
    EXPECT_EQ(q.df, 8);
    EXPECT_NEAR(q.statistic, 4.03230126434277, 1e-10);
}

TEST(System, PortmanteauZeroLags) {
    const auto q = diag::system_portmanteau(hosking_sample(), 0);
    EXPECT_EQ(q.statistic, 0.0);
    EXPECT_EQ(q.p_value, 1.0);
}

TEST(System, DuplicatedColumnIsConditioningError) {
    MatrixXd u = hosking_sample();
    MatrixXd dup(u.rows(), 3);
    dup << u, u.col(0);
    EXPECT_THROW((void)diag::system_normality(dup), ConditioningError);
    EXPECT_THROW((void)diag::system_portmanteau(dup, 2), ConditioningError);
}

TEST(System, NormalityDegreesOfFreedom) {
    std::mt19937_64 rng(60);
    const auto t = diag::system_normality(gaussian(rng, 200, 4));
    EXPECT_EQ(t.df, 8);
    EXPECT_GE(t.p_value, 0.0);
    EXPECT_LE(t.p_value, 1.0);
}

TEST(System, NormalityRejectsSkewedData) {
    std::mt19937_64 rng(61);
    MatrixXd u = gaussian(rng, 500, 3);
    u.col(1) = u.col(1).array().exp();
    EXPECT_LT(diag::system_normality(u).p_value, 1e-6);
}

TEST(System, NormalityInvariantToScaleShiftAndOrder) {
    std::mt19937_64 rng(62);
    const MatrixXd u = gaussian(rng, 100, 3);
    Eigen::Matrix3d a;
    a << 0, 0, 3, 2, 0, 0, 0, -0.5, 0;
    const MatrixXd v = (u * a.transpose()).rowwise() + Eigen::RowVector3d(1, -2, 5);
    EXPECT_NEAR(diag::system_normality(u).statistic, diag::system_normality(v).statistic, 1e-8);
}

TEST(Table, ZeroResidualsGiveErrorRows) {
    const auto t = diag::diagnostics_table(MatrixXd::Zero(40, 4), {"a", "b", "c", "d"});
    for (const auto& r : t.rows) EXPECT_TRUE(r.error.has_value());
    EXPECT_TRUE(t.system_row.error.has_value());
}

TEST(Table, RowsMatchUnivariateFunctions) {
    std::mt19937_64 rng(63);
    const MatrixXd u = gaussian(rng, 62, 4);
    const auto t = diag::diagnostics_table(u, {"dsL", "dsO", "dE", "dC"}, 1);
    ASSERT_EQ(t.rows.size(), 4u);
    std::vector<double> c(u.col(2).data(), u.col(2).data() + u.rows());
    EXPECT_EQ(t.rows[2].jb_p, diag::jarque_bera(c).p_value);
    EXPECT_EQ(t.rows[2].lb10_p, diag::ljung_box(c, 10).p_value);
    EXPECT_EQ(t.system_row.lb5_p, diag::system_portmanteau(u, 5, 1).p_value);
}

TEST(NullRates, UnivariateTestsUnderWhiteNoise) {
    std::mt19937_64 rng(64);
    std::normal_distribution<double> z(0.0, 1.0);
    const int reps = 1000;
    int jb = 0, lb = 0;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<double> x(1000);
        for (auto& v : x) v = z(rng);
        jb += diag::jarque_bera(x).p_value < 0.05;
        lb += diag::ljung_box(x, 10).p_value < 0.05;
    }
    const double band = 2.5758 * std::sqrt(0.05 * 0.95 / reps);
    EXPECT_NEAR(jb / 1000.0, 0.05, band);
    EXPECT_NEAR(lb / 1000.0, 0.05, band);
}

TEST(NullRates, PortmanteauUnderWhiteNoise) {
    std::mt19937_64 rng(65);
    int rejected = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        rejected += diag::system_portmanteau(gaussian(rng, 500, 4), 10).p_value < 0.05;
    }
    EXPECT_NEAR(rejected / 1000.0, 0.05, 0.015);
}

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace gcb;

namespace {

// Rank-1 system in three variables: dY = alpha beta' Y_{-1} + eps.
MatrixXd rank_one_levels(std::mt19937_64& rng, int T, const Eigen::Vector3d& alpha, const Eigen::Vector3d& beta) {
    std::normal_distribution<double> z(0.0, 1.0);
    MatrixXd y(T + 1, 3);
    y.row(0).setZero();
    for (int t = 1; t <= T; ++t) {
        const Eigen::Vector3d prev = y.row(t - 1).transpose();
        const Eigen::Vector3d e(z(rng), z(rng), z(rng));
        y.row(t) = (prev + alpha * beta.dot(prev) + e).transpose();
    }
    return y;
}

double rejection_rate(int reps, std::uint64_t seed, const Eigen::Vector3d& alpha, const Eigen::Vector3d& beta,
                      bool exclusion) {
    std::mt19937_64 rng(seed);
    int rejected = 0;
    for (int rep = 0; rep < reps; ++rep) {
        const MatrixXd y = rank_one_levels(rng, 1000, alpha, beta);
        const auto m = cvar::concentrate(y, VectorXd(), {1, 0, false});
        const auto r = exclusion ? hyp::exclusion_test(m, 1, 2) : hyp::weak_exogeneity_test(m, 1, 2);
        rejected += r.p_value < 0.05;
    }
    return static_cast<double>(rejected) / reps;
}

}  // namespace

TEST(LrTests, TrivialRestrictionGivesZero) {
    const auto m = cvar::concentrate(testutil::simulated_dataset(21), {3, 1, true});
    const MatrixXd eye = MatrixXd::Identity(4, 4);
    const auto b = hyp::beta_restriction_test(m, eye, 3, "none");
    const auto a = hyp::alpha_restriction_test(m, eye, 3, "none");
    EXPECT_NEAR(b.statistic, 0.0, 1e-8);
    EXPECT_NEAR(a.statistic, 0.0, 1e-8);
    EXPECT_EQ(b.df, 0);
    EXPECT_EQ(a.p_value, 1.0);
}

TEST(LrTests, RestrictedNeverExceedsUnrestricted) {
    for (std::uint64_t seed : {22, 23, 24}) {
        const auto m = cvar::concentrate(testutil::simulated_dataset(seed), {3, 1, true});
        for (int v = 0; v < 4; ++v) {
            for (const auto& r : {hyp::exclusion_test(m, 3, v), hyp::weak_exogeneity_test(m, 3, v)}) {
                EXPECT_LE(r.restricted_loglik, r.unrestricted_loglik + 1e-8) << r.hypothesis;
                EXPECT_GE(r.statistic, -1e-8);
                EXPECT_NEAR(r.statistic, -2.0 * (r.restricted_loglik - r.unrestricted_loglik), 1e-8);
                EXPECT_EQ(r.df, 3);
                EXPECT_GE(r.p_value, 0.0);
                EXPECT_LE(r.p_value, 1.0);
            }
        }
    }
}

TEST(LrTests, InvariantToRescalingAVariable) {
    const auto d = testutil::simulated_dataset(25);
    auto scaled = d;
    for (auto& v : scaled.emissions) v *= 3.664;
    const auto m1 = cvar::concentrate(d, {3, 1, true});
    const auto m2 = cvar::concentrate(scaled, {3, 1, true});
    for (int v = 0; v < 4; ++v) {
        EXPECT_NEAR(hyp::exclusion_test(m1, 3, v).statistic, hyp::exclusion_test(m2, 3, v).statistic, 1e-6);
        EXPECT_NEAR(hyp::weak_exogeneity_test(m1, 3, v).statistic, hyp::weak_exogeneity_test(m2, 3, v).statistic,
                    1e-6);
    }
}

TEST(LrTests, WeakExogeneityEqualsConditionalFactorisation) {
    // With A selecting all rows but j, the restricted likelihood factorises into the
    // marginal of dY_j (no levels) and the rank-r conditional model of the rest.
    const auto m = cvar::concentrate(testutil::simulated_dataset(26), {3, 1, true});
    const int j = kEmissions;
    const MatrixXd a = hyp::selector_without(4, j);
    const double direct = hyp::loglik_alpha_restricted(m, a, 3);

    const MatrixXd rb = m.r0.col(j);
    const MatrixXd ra = cvar::partial_out(m.r0 * a, rb);
    const MatrixXd r1 = cvar::partial_out(m.r1, rb);
    const double T = m.T;
    const MatrixXd saa = ra.transpose() * ra / T;
    const auto eig = cvar::reduced_rank_eigen(saa, ra.transpose() * r1 / T, r1.transpose() * r1 / T);
    double logdet = std::log(saa.determinant()) + std::log((rb.transpose() * rb)(0, 0) / T);
    for (int i = 0; i < 3; ++i) logdet += std::log1p(-eig.values(i));
    EXPECT_NEAR(direct, hyp::gaussian_loglik_from_logdet(T, 4, logdet), 1e-9);
}

TEST(LrTests, ExclusionEqualsDroppingVariableFromLevels) {
    const auto m = cvar::concentrate(testutil::simulated_dataset(27), {3, 1, true});
    const MatrixXd h = hyp::selector_without(4, kConcentration);
    auto reduced = m;
    reduced.r1 = m.r1 * h;
    reduced.s01 = m.s01 * h;
    reduced.s11 = h.transpose() * m.s11 * h;
    const auto eig = cvar::reduced_rank_eigen(reduced);
    EXPECT_NEAR(hyp::loglik_beta_restricted(m, h, 3), cvar::concentrated_loglik(m, eig.values, 3), 1e-10);
}

TEST(LrTests, UnknownVariableIsDomainError) {
    EXPECT_THROW((void)hyp::selector_without(4, 4), DomainError);
}

TEST(LrTests, ExclusionSizeUnderNull) {
    // Third variable absent from the cointegrating vector.
    const double rate = rejection_rate(1000, 31, {-0.3, 0.2, 0.1}, {1.0, -1.0, 0.0}, true);
    EXPECT_NEAR(rate, 0.05, 0.02);
}

TEST(LrTests, WeakExogeneitySizeUnderNull) {
    // Third variable does not adjust.
    const double rate = rejection_rate(1000, 32, {-0.3, 0.2, 0.0}, {1.0, -1.0, 0.5}, false);
    EXPECT_NEAR(rate, 0.05, 0.02);
}

TEST(LrTests, PowerAgainstRelevantVariable) {
    const double rate = rejection_rate(100, 33, {-0.3, 0.2, 0.1}, {1.0, -1.0, 0.5}, true);
    EXPECT_GT(rate, 0.9);
}

#include "cfpinn/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace cfpinn;
using namespace cfpinn::metrics;

TEST(RelativeL2, Examples)
{
    std::vector<double> const e{0.3, -1.2, 2.0};
    std::vector<double> const twice{0.6, -2.4, 4.0};
    EXPECT_EQ(relative_l2(e, e), 0.0);
    EXPECT_DOUBLE_EQ(relative_l2(twice, e), 1.0);
    EXPECT_DOUBLE_EQ(relative_l2(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}), std::sqrt(2.0));
}

TEST(RelativeL2, Errors)
{
    std::vector<double> const a{1.0};
    EXPECT_THROW((void)relative_l2(a, std::vector<double>{1.0, 2.0}), LengthMismatch);
    EXPECT_THROW((void)relative_l2(std::vector<double>{}, std::vector<double>{}), EmptyInput);
    EXPECT_THROW((void)relative_l2(a, std::vector<double>{0.0}), ZeroReference);
}

TEST(RelativeL2, ScaleInvariant)
{
    std::vector<double> const p{0.11, 0.52, -0.3};
    std::vector<double> const e{0.1, 0.5, -0.31};
    for (double k : {1e-3, 4.0, 1e5}) {
        std::vector<double> kp, ke;
        for (std::size_t i = 0; i < p.size(); ++i) {
            kp.push_back(k * p[i]);
            ke.push_back(k * e[i]);
        }
        EXPECT_NEAR(relative_l2(kp, ke), relative_l2(p, e), 1e-14);
    }
}

TEST(ErrorStats, Examples)
{
    std::vector<double> const e{1.0, 2.0};
    auto const zero = error_stats(e, e);
    EXPECT_EQ(zero.relative_l2, 0.0);
    EXPECT_EQ(zero.mean_abs_error, 0.0);
    EXPECT_EQ(zero.mean_sq_error, 0.0);
    EXPECT_EQ(zero.n_points, 2U);

    auto const r = error_stats(std::vector<double>{1.1, 1.9}, e);
    EXPECT_NEAR(r.mean_abs_error, 0.1, 1e-15);
    EXPECT_NEAR(r.mean_sq_error, 0.01, 1e-15);
}

TEST(LambdaError, Examples)
{
    EXPECT_EQ(lambda_error(0.5073, 0.5073), 0.0);
    EXPECT_NEAR(lambda_error(0.510, 0.5073), 0.5322, 1e-4);
    EXPECT_THROW((void)lambda_error(0.1, 0.0), ZeroReference);
}

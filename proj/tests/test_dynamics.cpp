#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ccnet/dynamics.hpp"

using namespace ccnet;

TEST(Evolve, FourStepsReturnWithBlockDeterminant) {
    const auto torus = BoxSpec::torus(2, 2);
    const auto omega = sample_disorder(3, torus);
    const auto u = build_network(omega, {0.0}, torus);
    cplx d = 1.0;
    for (const auto& s : block_sites(block_of({0, 0}, Chirality::counterclockwise))) d *= omega.phase(s);
    const auto psi = evolve(u, localized_state(torus, {0, 0}), 4);
    const Vector expected = localized_state(torus, {0, 0}).amplitudes * d;
    EXPECT_LT((psi.amplitudes - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Evolve, ZeroStepsIsIdentity) {
    const auto torus = BoxSpec::torus(1, 1);
    const auto u = build_network(sample_disorder(1, torus), {0.3}, torus);
    const auto psi0 = localized_state(torus, {1, 1});
    EXPECT_EQ(evolve(u, psi0, 0).amplitudes, psi0.amplitudes);
}

TEST(Evolve, BackwardUndoesForward) {
    const auto torus = BoxSpec::torus(3, 3);
    const auto u = build_network(sample_disorder(2, torus), {0.5}, torus);
    const auto psi0 = localized_state(torus, {0, 0});
    const auto there = evolve(u, psi0, 300);
    EXPECT_NEAR(there.norm(), 1.0, 1e-12);
    EXPECT_LT((evolve(u, there, -300).amplitudes - psi0.amplitudes).norm(), 1e-9);
}

TEST(Evolve, RejectsMismatchedGeometry) {
    const auto u = build_network(sample_disorder(1, BoxSpec::torus(1, 1)), {0.1}, BoxSpec::torus(1, 1));
    EXPECT_THROW(evolve(u, localized_state(BoxSpec::torus(2, 1), {0, 0}), 1), GeometryError);
}

TEST(Moment, Examples) {
    const auto torus = BoxSpec::torus(4, 4);
    EXPECT_DOUBLE_EQ(moment(localized_state(torus, {3, 4}), 2.0), 25.0);
    EXPECT_DOUBLE_EQ(moment(localized_state(torus, {3, 4}), 1.0), 5.0);
    EXPECT_DOUBLE_EQ(moment(localized_state(torus, {0, 0}), 2.0), 0.0);
    EXPECT_DOUBLE_EQ(moment(localized_state(torus, {1, 0}), 2.0), 1.0);
    EXPECT_DOUBLE_EQ(moment(localized_state(torus, {3, 4}), 0.0), 1.0);
    auto two = localized_state(torus, {1, 0});
    two.amplitudes += localized_state(torus, {0, 1}).amplitudes;
    two.amplitudes /= std::sqrt(2.0);
    EXPECT_NEAR(moment(two, 1.0), 1.0, 1e-15);
    EXPECT_THROW(moment(localized_state(torus, {0, 0}), -1.0), ConfigError);
}

TEST(Spread, PeriodicAndBoundedAtPhiZero) {
    SpreadRequest req;
    req.phi = 0.0;
    req.p = 1.0;
    req.torus = BoxSpec::torus(3, 3);
    req.horizon = 40;
    req.seeds = 4;
    for (const auto& run : spread_experiment(req)) {
        for (std::size_t n = 0; n + 4 < run.moment.size(); ++n) EXPECT_NEAR(run.moment[n + 4], run.moment[n], 1e-12);
        for (double m : run.moment) EXPECT_LE(m, std::sqrt(8.0));
        EXPECT_FALSE(run.leaked);
        EXPECT_EQ(run.first_contact, -1);
    }
}

TEST(Spread, NormConserved) {
    SpreadRequest req;
    req.phi = 0.7;
    req.torus = BoxSpec::torus(4, 4);
    req.horizon = 500;
    req.seeds = 3;
    req.leak_threshold = 2.0;  // wrapping is allowed here
    for (const auto& run : spread_experiment(req)) EXPECT_LT(run.max_norm_drift, 1e-10);
}

TEST(Spread, AgreesAcrossTorusSizesBeforeContact) {
    // Shared sites get the same phases, so the series agree until mass reaches the smaller seam.
    SpreadRequest small;
    small.phi = 0.4;
    small.torus = BoxSpec::torus(4, 4);
    small.horizon = 60;
    small.seeds = 3;
    small.seed = 5;
    small.leak_threshold = 2.0;
    small.seam_band = 1;
    SpreadRequest large = small;
    large.torus = BoxSpec::torus(8, 8);
    const auto a = spread_experiment(small);
    const auto b = spread_experiment(large);
    for (std::size_t k = 0; k < a.size(); ++k) {
        ASSERT_GT(a[k].first_contact, 0);
        for (long n = 0; n < a[k].first_contact; ++n) {
            EXPECT_NEAR(a[k].moment[std::size_t(n)], b[k].moment[std::size_t(n)], 1e-10) << n;
        }
    }
}

TEST(Spread, ReproducibleAcrossWorkers) {
    SpreadRequest req;
    req.phi = 0.2;
    req.torus = BoxSpec::torus(4, 4);
    req.horizon = 50;
    req.seeds = 6;
    const auto a = spread_experiment(req);
    req.workers = 3;
    const auto b = spread_experiment(req);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].moment, b[k].moment);
}

TEST(Spread, PlateauForSmallPhi) {
    SpreadRequest req;
    req.phi = 0.05;
    req.torus = BoxSpec::torus(8, 8);
    req.horizon = 400;
    req.seeds = 8;
    req.workers = 4;
    const auto runs = spread_experiment(req);
    const auto sum = summarize_plateau(runs);
    EXPECT_EQ(sum.leaked, 0u);
    EXPECT_EQ(sum.used, 8u);
    EXPECT_EQ(sum.median_series.size(), 401u);
    EXPECT_LE(sum.ratio, 2.0);
}

TEST(Spread, InvalidRequests) {
    SpreadRequest req;
    req.torus = BoxSpec::torus(2, 2);
    req.p = -1;
    EXPECT_THROW(spread_experiment(req), ConfigError);
    req.p = 2;
    req.horizon = -1;
    EXPECT_THROW(spread_experiment(req), ConfigError);
    req.horizon = 2;
    req.initial = localized_state(BoxSpec::torus(1, 1), {0, 0});
    EXPECT_THROW(spread_experiment(req), GeometryError);
}

TEST(SeamMask, OnlyPeriodicDirections) {
    const auto strip = BoxSpec::strip(1, 16);
    const auto mask = seam_mask(strip, 1);
    const IndexMap map(strip);
    for (std::size_t i = 0; i < map.size(); ++i) {
        const Site s = map.site(i);
        const bool edge_x = s.m == strip.x_min() || s.m == strip.x_max();
        EXPECT_EQ(mask(Eigen::Index(i)), edge_x ? 1.0 : 0.0);
    }
    EXPECT_EQ(seam_mask(BoxSpec::box(2, 2), 2).sum(), 0.0);
}

TEST(ReadState, ParsesRowsAndReportsLine) {
    const auto torus = BoxSpec::torus(1, 1);
    std::istringstream good("# initial state\n0 0 0.6 0\n\n1 0 0 0.8\n");
    const auto psi = read_state(good, torus);
    EXPECT_NEAR(psi.norm(), 1.0, 1e-15);
    std::istringstream bad("0 0 1 0\n1 x 0 0\n");
    try {
        read_state(bad, torus);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 2);
    }
    std::istringstream outside("40 0 1 0\n");
    EXPECT_THROW(read_state(outside, BoxSpec::box(1, 1)), ConfigError);
}

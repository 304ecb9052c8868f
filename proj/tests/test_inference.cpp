#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cefbounds/inference.hpp"

using namespace cefb;
using namespace cefb::inference;

namespace {

CountData counts() {
    CountData d;
    d.boundaries = {0, 39, 68, 100};
    d.mean = {20, 45, 70};
    d.sd = {12, 15, 10};
    d.n = {400, 300, 330};
    return d;
}

Settings settings(std::size_t b = 100) {
    Settings s;
    s.range = {0, 100};
    s.spec = StatisticSpec::interval_mean(10, 50);
    s.grid = 20;
    s.replicates = b;
    s.seed = 17;
    return s;
}

std::string archive(const BootstrapResult& r) {
    std::ostringstream os;
    write_archive(os, r);
    return os.str();
}

}  // namespace

TEST(Quantile, TypeSeven) {
    std::vector<double> xs{4, 1, 3, 2};
    EXPECT_EQ(quantile(xs, 0.0), 1.0);
    EXPECT_EQ(quantile(xs, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile(xs, 0.5), 2.5);
    // h = 0.1 * 3 = 0.3
    EXPECT_DOUBLE_EQ(quantile(xs, 0.1), 1.3);
    EXPECT_EQ(quantile({7}, 0.3), 7.0);
    EXPECT_THROW((void)quantile({}, 0.5), ValidationError);
}

TEST(Stream, ReplicatesAreIndependentOfOrder) {
    Stream a(5, 3), b(5, 3), c(5, 4);
    for (int i = 0; i < 10; ++i) {
        double x = a.uniform();
        EXPECT_EQ(x, b.uniform());
        EXPECT_GE(x, 0.0);
        EXPECT_LT(x, 1.0);
    }
    EXPECT_NE(Stream(5, 3).uniform(), c.uniform());
    Stream d(9, 0);
    for (int i = 0; i < 1000; ++i) EXPECT_LT(d.below(7), 7u);
}

TEST(Bootstrap, SeededRunsAreBitIdentical) {
    auto d = counts();
    auto s = settings();
    auto r1 = bootstrap_bounds(d, DistributionSpec::uniform(0, 100), s);
    auto r2 = bootstrap_bounds(d, DistributionSpec::uniform(0, 100), s);
    EXPECT_EQ(archive(r1), archive(r2));
    EXPECT_EQ(r1.ci_lower, r2.ci_lower);
    EXPECT_EQ(r1.ci_upper, r2.ci_upper);
    s.seed = 18;
    auto r3 = bootstrap_bounds(d, DistributionSpec::uniform(0, 100), s);
    EXPECT_NE(archive(r1), archive(r3));
}

TEST(Bootstrap, ZeroSpreadCollapsesToPointBounds) {
    auto d = counts();
    d.sd = {0, 0, 0};
    auto r = bootstrap_bounds(d, DistributionSpec::uniform(0, 100), settings());
    EXPECT_EQ(r.ci_lower, r.lower);
    EXPECT_EQ(r.ci_upper, r.upper);
    EXPECT_EQ(r.failures, 0u);
    for (const auto& rep : r.archive) {
        EXPECT_EQ(rep.lower, r.lower);
        EXPECT_EQ(rep.upper, r.upper);
    }
}

TEST(Bootstrap, ConfidenceSetContainsFullSample) {
    std::mt19937_64 rng(113);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 5; ++t) {
        CountData d;
        d.boundaries = {0, 30 + 20 * u(rng), 100};
        d.mean = {10 + 30 * u(rng), 50 + 40 * u(rng)};
        d.sd = {20 * u(rng), 20 * u(rng)};
        d.n = {20, 30};
        auto s = settings();
        s.spec = StatisticSpec::slope();
        auto r = bootstrap_bounds(d, DistributionSpec::uniform(0, 100), s);
        EXPECT_LE(r.ci_lower, r.lower);
        EXPECT_GE(r.ci_upper, r.upper);
    }
}

TEST(Bootstrap, MicrodataResamplesRows) {
    MicroData d;
    d.boundaries = {0, 50, 100};
    std::mt19937_64 rng(127);
    std::normal_distribution<double> noise(0, 5);
    for (int i = 0; i < 200; ++i) {
        std::size_t bin = i % 2;
        d.bin.push_back(bin);
        d.y.push_back(std::clamp(30.0 + 40.0 * static_cast<double>(bin) + noise(rng), 0.0, 100.0));
    }
    auto s = settings();
    auto full = full_sample(d, s);
    EXPECT_EQ(full.means.size(), 2u);
    auto r = bootstrap_bounds(d, DistributionSpec::uniform(0, 100), s);
    EXPECT_EQ(archive(r), archive(bootstrap_bounds(d, DistributionSpec::uniform(0, 100), s)));
    EXPECT_LE(r.ci_lower, r.lower);
    EXPECT_GE(r.ci_upper, r.upper);
    EXPECT_LT(r.ci_lower, r.ci_upper);
}

TEST(Bootstrap, RejectsBadSettings) {
    auto d = counts();
    EXPECT_THROW((void)bootstrap_bounds(d, DistributionSpec::uniform(0, 100), settings(99)), ValidationError);
    auto s = settings();
    s.alpha = 1.0;
    EXPECT_THROW((void)bootstrap_bounds(d, DistributionSpec::uniform(0, 100), s), ValidationError);
    d.n[1] = 0;
    EXPECT_THROW((void)bootstrap_bounds(d, DistributionSpec::uniform(0, 100), settings()), ValidationError);
    d = counts();
    d.sd[0] = -1;
    EXPECT_THROW((void)bootstrap_bounds(d, DistributionSpec::uniform(0, 100), settings()), ValidationError);
}

TEST(Bootstrap, PersistentInfeasibilityAborts) {
    auto d = counts();
    d.mean = {20, 45, 170};
    d.sd = {0, 0, 0};
    EXPECT_THROW((void)bootstrap_bounds(d, DistributionSpec::uniform(0, 100), settings()), ValidationError);
    // full sample sits on the range cap; most redraws leave it or break the order
    d.mean = {100, 100, 100};
    d.sd = {10, 10, 10};
    d.n = {1, 1, 1};
    try {
        (void)bootstrap_bounds(d, DistributionSpec::uniform(0, 100), settings());
        FAIL();
    } catch (const InfeasibleError& e) {
        EXPECT_NE(std::string(e.what()).find("redraws"), std::string::npos) << e.what();
    }
}

TEST(Readers, MicroAndCounts) {
    std::istringstream micro("bin_lo,bin_hi,y\n50,100,70\n0,50,10\n0,50,20\n50,100,80\n");
    auto m = read_micro(micro, "m.csv");
    EXPECT_EQ(m.boundaries, (std::vector<double>{0, 50, 100}));
    EXPECT_EQ(m.bin, (std::vector<std::size_t>{1, 0, 0, 1}));
    auto full = full_sample(m, settings());
    EXPECT_EQ(full.means, (std::vector<double>{15, 75}));

    std::istringstream gap("bin_lo,bin_hi,y\n0,40,1\n50,100,2\n");
    EXPECT_THROW((void)read_micro(gap, "m.csv"), ValidationError);
    std::istringstream empty("bin_lo,bin_hi,y\n");
    EXPECT_THROW((void)read_micro(empty, "m.csv"), ValidationError);

    std::istringstream c("bin_lo,bin_hi,mean,sd,n\n0,50,10,2,30\n50,100,60,3,40\n");
    auto cd = read_counts(c, "c.csv");
    EXPECT_EQ(cd.boundaries, (std::vector<double>{0, 50, 100}));
    EXPECT_EQ(cd.n, (std::vector<double>{30, 40}));
    std::istringstream badn("bin_lo,bin_hi,mean,sd,n\n0,50,10,2,0\n50,100,60,3,40\n");
    try {
        (void)read_counts(badn, "c.csv");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("c.csv:2"), std::string::npos) << e.what();
    }
}

#include <gtest/gtest.h>

#include <cmath>

#include "lodada/kmeans.hpp"
#include "lodada/rng.hpp"

using namespace lodada;

namespace {

std::vector<std::vector<double>> two_blobs(int per_blob, double sep, double std, std::uint64_t seed,
                                           std::vector<int>* labels = nullptr) {
    Rng rng(seed);
    std::vector<std::vector<double>> pts;
    for (int b = 0; b < 2; ++b) {
        double center = b == 0 ? -sep : sep;
        for (int i = 0; i < per_blob; ++i) {
            pts.push_back({rng.normal(center, std), rng.normal(0.0, std)});
            if (labels) labels->push_back(b);
        }
    }
    return pts;
}

}  // namespace

TEST(Kmeans, SingleClusterIsTheMean) {
    std::vector<std::vector<double>> pts{{0, 0}, {2, 0}, {4, 6}};
    ClusterModel m = kmeans_fit(pts, 1, 42);
    EXPECT_NEAR(m.centroids[0][0], 2.0, 1e-12);
    EXPECT_NEAR(m.centroids[0][1], 2.0, 1e-12);
    EXPECT_EQ(m.members[0].size(), 3u);
}

TEST(Kmeans, KEqualsPointCount) {
    std::vector<std::vector<double>> pts{{0, 0}, {5, 0}, {0, 5}, {5, 5}};
    ClusterModel m = kmeans_fit(pts, 4, 7);
    for (int c = 0; c < 4; ++c) {
        EXPECT_EQ(m.members[c].size(), 1u);
        EXPECT_DOUBLE_EQ(m.radii[c], 0.0);
    }
    EXPECT_DOUBLE_EQ(m.mean_radius, 0.0);
}

TEST(Kmeans, KLargerThanPointsThrows) {
    std::vector<std::vector<double>> pts{{0, 0}};
    EXPECT_THROW(kmeans_fit(pts, 2, 1), ArgumentError);
}

// Oracle: generated blob labels; each recovered cluster must be >= 99% pure.
TEST(Kmeans, SeparatedBlobsAreRecovered) {
    std::vector<int> labels;
    std::vector<std::vector<double>> pts = two_blobs(200, 10.0, 0.1, 2023, &labels);
    ClusterModel m = kmeans_fit(pts, 2, 5);
    for (int c = 0; c < 2; ++c) {
        ASSERT_FALSE(m.members[c].empty());
        int count0 = 0;
        for (std::size_t idx : m.members[c]) count0 += labels[idx] == 0 ? 1 : 0;
        double purity = std::max(count0, static_cast<int>(m.members[c].size()) - count0) /
                        static_cast<double>(m.members[c].size());
        EXPECT_GE(purity, 0.99);
    }
}

TEST(Kmeans, ObjectiveMonotoneNonIncreasing) {
    Rng rng(6);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 500; ++i) pts.push_back({rng.normal(), rng.normal(), rng.normal()});
    ClusterModel m = kmeans_fit(pts, 8, 99);
    for (std::size_t i = 1; i < m.objective_trace.size(); ++i)
        EXPECT_LE(m.objective_trace[i], m.objective_trace[i - 1] + 1e-9);
}

TEST(Kmeans, SameSeedBitwiseIdentical) {
    Rng rng(8);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 300; ++i) pts.push_back({rng.normal(), rng.normal()});
    ClusterModel a = kmeans_fit(pts, 5, 31415);
    ClusterModel b = kmeans_fit(pts, 5, 31415);
    for (int c = 0; c < 5; ++c) {
        EXPECT_EQ(a.centroids[c], b.centroids[c]);
        EXPECT_EQ(a.members[c], b.members[c]);
    }
    EXPECT_EQ(a.objective, b.objective);
}

TEST(AssignSource, CentroidPointHasZeroDistance) {
    std::vector<std::vector<double>> pts{{0, 0}, {0.5, 0}, {10, 0}, {10.5, 0}};
    ClusterModel m = kmeans_fit(pts, 2, 3);
    SourceAssignment asg = assign_source(m, {m.centroids[0]}, 1.5);
    EXPECT_EQ(asg.cluster[0], 0);
    EXPECT_DOUBLE_EQ(asg.distance[0], 0.0);
    EXPECT_TRUE(asg.accepted[0]);
}

TEST(AssignSource, InfiniteDeltaAcceptsEverything) {
    std::vector<std::vector<double>> pts{{0, 0}, {1, 0}, {0, 1}};
    ClusterModel m = kmeans_fit(pts, 1, 3);
    std::vector<std::vector<double>> src{{100, 100}, {-50, 3}, {0, 0}};
    SourceAssignment far_delta = assign_source(m, src, 1e18);
    SourceAssignment inf_delta = assign_source(m, src, std::numeric_limits<double>::infinity());
    for (int i = 0; i < 3; ++i) {
        EXPECT_TRUE(far_delta.accepted[i]);
        EXPECT_TRUE(inf_delta.accepted[i]);
    }
}

TEST(AssignSource, ThresholdArithmetic) {
    // Single cluster of radius 1 => mean radius 1; a point at distance 2 is
    // rejected at delta = 1.5.
    std::vector<std::vector<double>> pts{{-1, 0}, {1, 0}};
    ClusterModel m = kmeans_fit(pts, 1, 3);
    ASSERT_DOUBLE_EQ(m.mean_radius, 1.0);
    SourceAssignment asg = assign_source(m, {{2.0, 0.0}, {1.4, 0.0}}, 1.5);
    EXPECT_FALSE(asg.accepted[0]);  // distance 2.0 > 1.5
    EXPECT_TRUE(asg.accepted[1]);   // distance 1.4 <= 1.5
}

TEST(AssignSource, AcceptanceMonotoneInDelta) {
    Rng rng(12);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 200; ++i) pts.push_back({rng.normal(), rng.normal()});
    ClusterModel m = kmeans_fit(pts, 4, 9);
    std::vector<std::vector<double>> src;
    for (int i = 0; i < 300; ++i) src.push_back({rng.normal(0, 2), rng.normal(0, 2)});
    SourceAssignment small = assign_source(m, src, 0.8);
    SourceAssignment large = assign_source(m, src, 2.0);
    for (int i = 0; i < 300; ++i)
        if (small.accepted[i]) EXPECT_TRUE(large.accepted[i]);
    EXPECT_LE(small.accepted_count(), large.accepted_count());
}

TEST(ClusterCounts, NoAcceptedSource) {
    std::vector<std::vector<double>> pts{{0, 0}, {1, 0}};
    ClusterModel m = kmeans_fit(pts, 1, 3);
    SourceAssignment asg = assign_source(m, {{100, 0}, {200, 0}}, 1.0);
    ClusterCounts counts = cluster_counts(m, asg);
    EXPECT_EQ(counts.n_source[0], 0u);
    EXPECT_EQ(counts.n_target[0], 2u);
}

TEST(ClusterCounts, ConservationOnRandomData) {
    Rng rng(13);
    std::vector<std::vector<double>> tar_pts;
    for (int i = 0; i < 400; ++i) tar_pts.push_back({rng.normal(), rng.normal()});
    ClusterModel m = kmeans_fit(tar_pts, 6, 77);
    std::vector<std::vector<double>> src;
    for (int i = 0; i < 500; ++i) src.push_back({rng.normal(), rng.normal()});
    SourceAssignment asg = assign_source(m, src, 1.5);
    ClusterCounts counts = cluster_counts(m, asg);
    std::size_t n1 = 0, n0 = 0;
    for (int c = 0; c < m.k; ++c) {
        n1 += counts.n_target[c];
        n0 += counts.n_source[c];
    }
    EXPECT_EQ(n1, tar_pts.size());
    EXPECT_EQ(n0, asg.accepted_count());
}

TEST(ClusterCounts, HandPlacedToy) {
    // Two target clusters around (0,0) and (10,0); three source points near
    // the first, one near the second, one far away.
    std::vector<std::vector<double>> tar{{-1, 0}, {1, 0}, {9, 0}, {11, 0}};
    ClusterModel m = kmeans_fit(tar, 2, 4);
    ASSERT_DOUBLE_EQ(m.mean_radius, 1.0);
    int left = m.centroids[0][0] < 5 ? 0 : 1;
    int right = 1 - left;
    std::vector<std::vector<double>> src{{0.5, 0}, {-0.5, 0}, {0, 0.5}, {10, 0.5}, {50, 0}};
    SourceAssignment asg = assign_source(m, src, 1.5);
    ClusterCounts counts = cluster_counts(m, asg);
    EXPECT_EQ(counts.n_source[left], 3u);
    EXPECT_EQ(counts.n_source[right], 1u);
    EXPECT_EQ(counts.n_target[left], 2u);
    EXPECT_EQ(counts.n_target[right], 2u);
    EXPECT_FALSE(asg.accepted[4]);
}

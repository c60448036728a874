#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lodada/dataset_io.hpp"
#include "lodada/perturb.hpp"
#include "lodada/rng.hpp"
#include "lodada/transition.hpp"

using namespace lodada;
namespace fs = std::filesystem;

namespace {

Transition make_transition(std::vector<double> s, std::vector<double> a, double r, std::vector<double> s_next,
                           Domain d = Domain::Source) {
    Transition t;
    t.s = std::move(s);
    t.a = std::move(a);
    t.r = r;
    t.s_next = std::move(s_next);
    t.domain = d;
    return t;
}

fs::path temp_dir() {
    fs::path dir = fs::temp_directory_path() / "lodada_data_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST(Concat, OrdersStateThenAction) {
    Transition t = make_transition({1, 2}, {3}, 0, {0, 0});
    EXPECT_EQ(concat(t), (std::vector<double>{1, 2, 3}));
}

TEST(Concat, DegenerateEmptyState) {
    Transition t = make_transition({}, {5}, 0, {});
    EXPECT_EQ(concat(t), (std::vector<double>{5}));
}

TEST(Concat, ZeroVectors) {
    Transition t = make_transition({0, 0}, {0}, 0, {0, 0});
    EXPECT_EQ(concat(t), (std::vector<double>{0, 0, 0}));
}

TEST(Concat, LengthAndInvertibility) {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        int d_s = 1 + static_cast<int>(rng.index(4));
        int d_a = 1 + static_cast<int>(rng.index(3));
        Transition t;
        for (int i = 0; i < d_s; ++i) t.s.push_back(rng.normal());
        for (int i = 0; i < d_a; ++i) t.a.push_back(rng.normal());
        t.s_next = t.s;
        std::vector<double> z = concat(t);
        ASSERT_EQ(z.size(), static_cast<std::size_t>(d_s + d_a));
        // Splitting at d_s recovers both parts.
        EXPECT_EQ(std::vector<double>(z.begin(), z.begin() + d_s), t.s);
        EXPECT_EQ(std::vector<double>(z.begin() + d_s, z.end()), t.a);
    }
}

TEST(DatasetIo, LoadsThreeRecords) {
    fs::path file = temp_dir() / "three.jsonl";
    {
        std::ofstream out(file);
        out << R"({"d_s":2,"d_a":1,"name":"toy"})" << "\n";
        out << R"({"s":[0.0,1.0],"a":[0.5],"r":1.0,"s_next":[1.0,1.0],"domain":"source"})" << "\n";
        out << R"({"s":[1.0,1.0],"a":[-0.5],"r":0.0,"s_next":[0.0,0.0],"domain":"target"})" << "\n";
        out << R"({"s":[0.5,0.5],"a":[0.0],"r":-1.0,"s_next":[0.5,0.5],"domain":"source"})" << "\n";
    }
    Dataset ds = load_dataset(file);
    ASSERT_EQ(ds.size(), 3u);
    EXPECT_EQ(ds.d_s, 2);
    EXPECT_EQ(ds.d_a, 1);
    EXPECT_EQ(ds.meta.name, "toy");
    EXPECT_EQ(ds.records[1].domain, Domain::Target);
    EXPECT_DOUBLE_EQ(ds.records[0].r, 1.0);
}

TEST(DatasetIo, DimensionMismatchNamesTheLine) {
    fs::path file = temp_dir() / "mismatch.jsonl";
    {
        std::ofstream out(file);
        out << R"({"d_s":2,"d_a":1,"name":"bad"})" << "\n";
        out << R"({"s":[0.0,1.0],"a":[0.5],"r":1.0,"s_next":[1.0,1.0],"domain":"source"})" << "\n";
        out << R"({"s":[0.0,1.0,2.0],"a":[0.5],"r":1.0,"s_next":[1.0,1.0,0.0],"domain":"source"})" << "\n";
    }
    try {
        load_dataset(file);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("record 2"), std::string::npos) << msg;
    }
}

TEST(DatasetIo, EmptyFileIsAnError) {
    fs::path file = temp_dir() / "empty.jsonl";
    std::ofstream(file).close();
    EXPECT_THROW(load_dataset(file), DataError);
}

TEST(DatasetIo, MalformedRecordNamesTheLine) {
    fs::path file = temp_dir() / "malformed.jsonl";
    {
        std::ofstream out(file);
        out << R"({"d_s":1,"d_a":1,"name":"bad"})" << "\n";
        out << "{not json}\n";
    }
    try {
        load_dataset(file);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(DatasetIo, RoundTripIsByteIdentical) {
    Dataset ds;
    ds.d_s = 2;
    ds.d_a = 1;
    ds.meta.name = "roundtrip";
    ds.meta.seed = 42;
    ds.meta.generator = "test";
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        Transition t = make_transition({rng.normal(), rng.normal() * 1e-7}, {rng.uniform(-1, 1)}, rng.normal(),
                                       {rng.normal() * 1e9, rng.normal()},
                                       i % 2 ? Domain::Source : Domain::Target);
        ds.records.push_back(std::move(t));
    }
    fs::path a = temp_dir() / "rt_a.jsonl";
    fs::path b = temp_dir() / "rt_b.jsonl";
    save_dataset(ds, a);
    Dataset loaded = load_dataset(a);
    save_dataset(loaded, b);
    EXPECT_EQ(slurp(a), slurp(b));
    ASSERT_EQ(loaded.size(), ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        EXPECT_EQ(loaded.records[i].s, ds.records[i].s);
        EXPECT_EQ(loaded.records[i].a, ds.records[i].a);
        EXPECT_EQ(loaded.records[i].s_next, ds.records[i].s_next);
        EXPECT_EQ(loaded.records[i].r, ds.records[i].r);
        EXPECT_EQ(loaded.records[i].domain, ds.records[i].domain);
    }
}

TEST(DatasetIo, OverwriteSucceedsAndUnwritableDirFails) {
    Dataset ds;
    ds.d_s = 1;
    ds.d_a = 1;
    ds.meta.name = "tiny";
    ds.records.push_back(make_transition({1}, {0}, 0, {1}));
    fs::path file = temp_dir() / "overwrite.jsonl";
    save_dataset(ds, file);
    save_dataset(ds, file);  // overwrite
    EXPECT_EQ(load_dataset(file).size(), 1u);
    EXPECT_THROW(save_dataset(ds, "/nonexistent_dir_lodada/x.jsonl"), DataError);
}

TEST(NormalizationStats, DegenerateStdFloors) {
    Dataset ds;
    ds.d_s = 2;
    ds.d_a = 1;
    for (int i = 0; i < 5; ++i) ds.records.push_back(make_transition({3, -1}, {0}, 0, {3, -1}));
    NormStats st = normalization_stats(ds);
    EXPECT_DOUBLE_EQ(st.mean[0], 3.0);
    EXPECT_DOUBLE_EQ(st.mean[1], -1.0);
    EXPECT_DOUBLE_EQ(st.std[0], 1e-6);
    EXPECT_DOUBLE_EQ(st.std[1], 1e-6);
}

TEST(NormalizationStats, HandComputedPair) {
    Dataset ds;
    ds.d_s = 1;
    ds.d_a = 1;
    ds.records.push_back(make_transition({0}, {0}, 0, {2}));
    NormStats st = normalization_stats(ds);
    EXPECT_DOUBLE_EQ(st.mean[0], 1.0);
    EXPECT_DOUBLE_EQ(st.std[0], 1.0);
}

TEST(NormalizationStats, NormalizedDatasetIsStandard) {
    Dataset ds;
    ds.d_s = 2;
    ds.d_a = 1;
    Rng rng(11);
    for (int i = 0; i < 500; ++i)
        ds.records.push_back(
            make_transition({rng.normal(3, 2), rng.normal(-1, 0.5)}, {0}, 0, {rng.normal(3, 2), rng.normal(-1, 0.5)}));
    Dataset nds = normalize_states(ds, normalization_stats(ds));
    NormStats st = normalization_stats(nds);
    for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR(st.mean[i], 0.0, 1e-9);
        EXPECT_NEAR(st.std[i], 1.0, 1e-9);
    }
}

TEST(Perturbation, ZeroVarianceIsIdentity) {
    Dataset ds;
    ds.d_s = 2;
    ds.d_a = 1;
    Rng rng(5);
    for (int i = 0; i < 100; ++i)
        ds.records.push_back(make_transition({rng.normal(), rng.normal()}, {0}, 1, {rng.normal(), rng.normal()}));
    Dataset out = inject_local_perturbation(ds, 7, {0.0}, 99);
    for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(out.records[i].s_next, ds.records[i].s_next);
}

TEST(Perturbation, TooFewRegionsForGroups) {
    Dataset ds;
    ds.d_s = 1;
    ds.d_a = 1;
    for (int i = 0; i < 10; ++i) ds.records.push_back(make_transition({double(i)}, {0}, 0, {double(i)}));
    EXPECT_THROW(inject_local_perturbation(ds, 3, {0.1, 0.2, 0.3, 0.4, 0.5}, 1), ArgumentError);
    EXPECT_THROW(inject_local_perturbation(ds, 5, {-0.1}, 1), ArgumentError);
}

// Oracle: 15 point-blobs along x at 10*i; lexicographic region order is blob
// order, so blob i belongs to group i mod 3 and its injected noise must have
// that group's variance (sample variance within 20%).
TEST(Perturbation, GroupVariancesMatchGenerator) {
    const std::vector<double> variances{0.1, 0.5, 2.0};
    const int blobs = 15;
    const int per_blob = 1200;
    Dataset ds;
    ds.d_s = 2;
    ds.d_a = 1;
    for (int b = 0; b < blobs; ++b)
        for (int i = 0; i < per_blob; ++i)
            ds.records.push_back(make_transition({0, 0}, {0}, 0, {10.0 * b, 0.0}));
    Dataset out = inject_local_perturbation(ds, blobs, variances, 1234);

    for (int b = 0; b < blobs; ++b) {
        double want = variances[b % 3];
        double sum = 0.0, sum_sq = 0.0;
        int n = 0;
        for (int i = 0; i < per_blob; ++i) {
            const Transition& before = ds.records[static_cast<std::size_t>(b) * per_blob + i];
            const Transition& after = out.records[static_cast<std::size_t>(b) * per_blob + i];
            EXPECT_EQ(after.s, before.s);
            EXPECT_EQ(after.a, before.a);
            EXPECT_EQ(after.r, before.r);
            for (int d = 0; d < 2; ++d) {
                double noise = after.s_next[d] - before.s_next[d];
                sum += noise;
                sum_sq += noise * noise;
                ++n;
            }
        }
        double var = (sum_sq - sum * sum / n) / (n - 1);
        EXPECT_NEAR(var, want, 0.2 * want) << "blob " << b;
    }
}

TEST(Perturbation, OnlyNextStatesChange) {
    Dataset ds;
    ds.d_s = 1;
    ds.d_a = 1;
    Rng rng(17);
    for (int i = 0; i < 200; ++i)
        ds.records.push_back(make_transition({rng.normal()}, {rng.normal()}, rng.normal(), {rng.normal()},
                                             i % 2 ? Domain::Source : Domain::Target));
    Dataset out = inject_local_perturbation(ds, 4, {1.0, 2.0}, 7);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        EXPECT_EQ(out.records[i].s, ds.records[i].s);
        EXPECT_EQ(out.records[i].a, ds.records[i].a);
        EXPECT_EQ(out.records[i].r, ds.records[i].r);
        EXPECT_EQ(out.records[i].domain, ds.records[i].domain);
    }
}

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>

#include <gtest/gtest.h>

#include "blowup/io.hpp"

using namespace blowup;

TEST(Format, RoundTripsDoubles) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::nextafter(1.0, 2.0)})
        EXPECT_EQ(std::strtod(format17(v).c_str(), nullptr), v);
}

TEST(Csv, WriteAndReadBack) {
    Table t;
    t.add("x", {0.0, 0.5, 1.0});
    t.add("f", {1.0 / 3.0, -7e-12, 2.0});
    EXPECT_THROW(t.add("bad", {1.0}), std::invalid_argument);
    EXPECT_EQ(t.rows(), 3u);
    const auto dir = std::filesystem::temp_directory_path() / "blowup_io_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "t.csv").string();
    write_text(path, to_csv(t));
    const Table r = read_csv(path);
    ASSERT_EQ(r.header, t.header);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(r.columns[c], t.columns[c]);
    write_text(path, "x,f\n1,abc\n");
    EXPECT_THROW(read_csv(path), IoError);
    EXPECT_THROW(read_csv((dir / "missing.csv").string()), IoError);
    std::filesystem::remove_all(dir);
}

TEST(Digest, Fnv1aReferenceVectors) {
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Parallel, CoversEveryIndexOnce) {
    for (unsigned jobs : {1u, 3u}) {
        std::vector<std::atomic<int>> hits(97);
        parallel_for(97, jobs, [&](std::size_t i) { ++hits[i]; });
        for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
}

TEST(Parallel, RethrowsLowestFailingIndex) {
    for (unsigned jobs : {1u, 4u}) {
        try {
            parallel_for(50, jobs, [](std::size_t i) {
                if (i == 31 || i == 17) throw std::runtime_error("fail " + std::to_string(i));
            });
            FAIL() << "no exception";
        } catch (const std::runtime_error& e) {
            EXPECT_STREQ(e.what(), "fail 17");
        }
    }
}

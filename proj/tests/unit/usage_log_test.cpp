#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "gradeloop/usage_log/usage_log.hpp"

using namespace gradeloop::usage;

namespace {

class TempLog : public ::testing::Test {
protected:
    void SetUp() override {
        path_ = std::filesystem::temp_directory_path() /
                ("gradeloop_usage_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name() + ".csv");
        std::filesystem::remove(path_);
    }
    void TearDown() override { std::filesystem::remove(path_); }
    std::filesystem::path path_;
};

UsageErrc error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const UsageError& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error";
    return UsageErrc::StorageFailure;
}

}  // namespace

TEST_F(TempLog, FirstAppendIsSequenceOne) {
    UsageLog log(path_, [] { return std::chrono::system_clock::time_point{} + std::chrono::hours(24 * 365 * 50); });
    const auto r = log.append("abc123", 3, 80.0);
    EXPECT_EQ(r.sequence, 1);
    EXPECT_EQ(r.timestamp, "2019-12-20T00:00:00Z");
    std::ifstream in(path_);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "1,2019-12-20T00:00:00Z,abc123,3,80");
}

TEST_F(TempLog, ConcurrentAppendsHaveNoGaps) {
    UsageLog log(path_);
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t)
        threads.emplace_back([&, t] {
            for (int i = 0; i < 25; ++i) log.append("s" + std::to_string(t), i, 50.0);
        });
    for (auto& t : threads) t.join();
    const auto records = log.snapshot();
    ASSERT_EQ(records.size(), 200u);
    for (std::size_t i = 0; i < records.size(); ++i) EXPECT_EQ(records[i].sequence, static_cast<std::int64_t>(i + 1));
}

TEST_F(TempLog, ScoreBounds) {
    UsageLog log(path_);
    EXPECT_NO_THROW(log.append("p", 1, 100.0));
    EXPECT_NO_THROW(log.append("p", 1, 0.0));
    EXPECT_EQ(error_of([&] { log.append("p", 1, 100.5); }), UsageErrc::InvalidRecord);
    EXPECT_EQ(error_of([&] { log.append("p", 1, -0.5); }), UsageErrc::InvalidRecord);
    EXPECT_EQ(error_of([&] { log.append("p,q", 1, 1.0); }), UsageErrc::InvalidRecord);
    EXPECT_EQ(log.snapshot().size(), 2u);
}

TEST_F(TempLog, ReopenContinuesSequenceAndKeepsRows) {
    {
        UsageLog log(path_);
        log.append("a", 1, 12.5);
        log.append("b", 1, 33.333333333333336);
    }
    UsageLog log(path_);
    EXPECT_EQ(log.append("a", 2, 1.0).sequence, 3);
    const auto rows = log.snapshot();
    EXPECT_EQ(rows[1].score_percent, 33.333333333333336);
}

TEST(ParseLog, RejectsCorruption) {
    EXPECT_EQ(error_of([] { parse_log("2,t,a,1,50\n1,t,a,1,50\n"); }), UsageErrc::CorruptLog);
    EXPECT_EQ(error_of([] { parse_log("1,t,a,1\n"); }), UsageErrc::CorruptLog);
    EXPECT_EQ(error_of([] { parse_log("1,t,a,1,101\n"); }), UsageErrc::CorruptLog);
    EXPECT_EQ(error_of([] { parse_log("x,t,a,1,50\n"); }), UsageErrc::CorruptLog);
    EXPECT_TRUE(parse_log("").empty());
}

TEST(SubmissionsByStudent, Examples) {
    const auto g = submissions_by_student(parse_log("1,t,s1,3,80\n2,t,s1,3,100\n"));
    ASSERT_EQ(g.size(), 1u);
    EXPECT_EQ(g.at("s1").at(3), (std::vector<double>{80, 100}));
    EXPECT_TRUE(submissions_by_student({}).empty());
    std::vector<UsageRecord> backwards{{2, "t", "a", 1, 1}, {1, "t", "a", 1, 2}};
    EXPECT_EQ(error_of([&] { submissions_by_student(backwards); }), UsageErrc::CorruptLog);
}

TEST(SubmissionsByStudent, ShuffleAndSortOracle) {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<UsageRecord> records;
        const int n = 1 + static_cast<int>(rng() % 300);
        std::int64_t seq = 0;
        for (int i = 0; i < n; ++i) {
            seq += 1 + rng() % 3;
            records.push_back({seq, "t", "s" + std::to_string(rng() % 12), static_cast<int>(rng() % 6),
                               static_cast<double>(rng() % 201) / 2.0});
        }
        const auto grouped = submissions_by_student(records);

        // Oracle: shuffle, re-sort by (student, exercise, sequence), then collect runs.
        auto shuffled = records;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::sort(shuffled.begin(), shuffled.end(), [](const auto& a, const auto& b) {
            return std::tie(a.pseudonym, a.exercise_id, a.sequence) < std::tie(b.pseudonym, b.exercise_id, b.sequence);
        });
        Grouped expected;
        for (const auto& r : shuffled) expected[r.pseudonym][r.exercise_id].push_back(r.score_percent);
        EXPECT_EQ(grouped, expected);

        std::size_t total = 0;
        for (const auto& [s, exercises] : grouped)
            for (const auto& [e, scores] : exercises) total += scores.size();
        EXPECT_EQ(total, records.size());
        EXPECT_EQ(submissions_by_student(records), grouped);
    }
}

#include <gtest/gtest.h>

#include <random>

#include "gradeloop/exercise_format/odt.hpp"
#include "gradeloop/grading_orchestrator/orchestrator.hpp"
#include "gradeloop/identity_privacy/identity.hpp"
#include "gradeloop/llm_gateway/providers.hpp"
#include "test_support.hpp"

using namespace gradeloop;
using namespace gradeloop::grading;
using namespace std::chrono_literals;
using gradeloop::testing::odt_from_text;
using gradeloop::testing::read_fixture;

namespace {

prompt::SolutionRegistry registry_8() {
    return prompt::SolutionRegistry::parse(
        "[solution]\nexercise_id: 8\nanswer_id: 8.1a\nmax_points: 4\nmode: close\n"
        "model_answer: Use code review, it is more efficient (2.0 vs 1.5 defects per hour).\n");
}

prompt::SolutionRegistry registry_two() {
    return prompt::SolutionRegistry::parse(
        "[solution]\nexercise_id: 2\nanswer_id: 2.1\nmax_points: 4\nmode: close\nmodel_answer: alpha\n"
        "[solution]\nexercise_id: 2\nanswer_id: 2.2\nmax_points: 6\nmode: partial\nn: 2\nmodel_answer: beta\n");
}

std::string two_block_text(bool reversed = false) {
    const std::string a = "Question 2.1) First?\n## Answer 2.1 Start ## POINTS: 4 ##\nfirst answer\n## Answer 2.1 End ##\n";
    const std::string b = "Question 2.2) Second?\n## Answer 2.2 Start ## POINTS: 6 ##\nsecond answer\n## Answer 2.2 End ##\n";
    return reversed ? b + a : a + b;
}

struct Rig {
    std::shared_ptr<llm::MockProvider> mock = std::make_shared<llm::MockProvider>();
    llm::Gateway gateway{mock, llm::RetryPolicy{3, 0ms, 1.0}};
};

}  // namespace

TEST(GradeSubmission, SingleBlockFullMarks) {
    Rig rig;
    rig.mock->enqueue_response("Correct. POINTS: 4");
    const auto result = grade_submission(odt_from_text(read_fixture("question_8_1a.txt")), 8, registry_8(), rig.gateway);
    ASSERT_EQ(result.answers.size(), 1u);
    EXPECT_EQ(result.total_awarded, HalfPoints::whole(4));
    EXPECT_EQ(result.total_max, HalfPoints::whole(4));
    EXPECT_DOUBLE_EQ(result.score_percent, 100.0);
    EXPECT_EQ(result.answers[0].feedback_text, "Correct.");
    EXPECT_EQ(result.answers[0].attempts, 1);
    const auto flat = odt::flatten_content(odt::read_content_part(result.merged_document)).text;
    EXPECT_NE(flat.find("## Answer 8.1a End ##\n## Feedback 8.1a Start ##\nCorrect.\nAWARDED: 4 / 4"), std::string::npos);
}

TEST(GradeSubmission, EmptyAnswerIsStillGraded) {
    Rig rig;
    rig.mock->set_default("Nothing was submitted. POINTS: 0");
    const auto result = grade_submission(odt_from_text(read_fixture("question_8_1a.txt")), 8, registry_8(), rig.gateway);
    EXPECT_EQ(rig.mock->calls(), 1);
    EXPECT_NE(rig.mock->prompts()[0].find("<Student Solution>"), std::string::npos);
    EXPECT_DOUBLE_EQ(result.score_percent, 0.0);
}

TEST(GradeSubmission, TwoBlocksSumExactly) {
    Rig rig;
    rig.mock->add_rule("first answer", "ok POINTS: 2");
    rig.mock->add_rule("second answer", "ok POINTS: 3");
    const auto result = grade_submission(odt_from_text(two_block_text()), 2, registry_two(), rig.gateway);
    EXPECT_EQ(result.total_awarded, HalfPoints::whole(5));
    EXPECT_EQ(result.total_max, HalfPoints::whole(10));
    EXPECT_DOUBLE_EQ(result.score_percent, 50.0);
}

TEST(GradeSubmission, ScoreInvariantUnderBlockOrder) {
    Rig rig;
    rig.mock->add_rule("first answer", "ok POINTS: 1.5");
    rig.mock->add_rule("second answer", "ok POINTS: 5.5");
    const auto forward = grade_submission(odt_from_text(two_block_text()), 2, registry_two(), rig.gateway);
    const auto backward = grade_submission(odt_from_text(two_block_text(true)), 2, registry_two(), rig.gateway);
    EXPECT_EQ(forward.score_percent, backward.score_percent);
    EXPECT_EQ(forward.total_awarded, backward.total_awarded);
}

TEST(GradeSubmission, MissingEntryAbortsBeforeAnyCall) {
    Rig rig;
    rig.mock->set_default("POINTS: 1");
    const std::string text = two_block_text() + "## Answer 9.9z Start ## POINTS: 1 ##\nx\n## Answer 9.9z End ##\n";
    try {
        grade_submission(odt_from_text(text), 2, registry_two(), rig.gateway);
        FAIL();
    } catch (const GradingError& e) {
        EXPECT_EQ(e.code(), GradingErrc::MissingSolutionEntry);
        EXPECT_EQ(e.answer_id(), "9.9z");
    }
    EXPECT_EQ(rig.mock->calls(), 0);
}

TEST(GradeSubmission, MaxPointsMismatchAbortsBeforeAnyCall) {
    Rig rig;
    rig.mock->set_default("POINTS: 1");
    std::string text = two_block_text();
    text.replace(text.find("POINTS: 6"), 9, "POINTS: 5");
    try {
        grade_submission(odt_from_text(text), 2, registry_two(), rig.gateway);
        FAIL();
    } catch (const GradingError& e) {
        EXPECT_EQ(e.code(), GradingErrc::MaxPointsMismatch);
        EXPECT_EQ(e.answer_id(), "2.2");
    }
    EXPECT_EQ(rig.mock->calls(), 0);
}

TEST(GradeSubmission, ReRequestsOnceAfterMalformedGrade) {
    Rig rig;
    rig.mock->enqueue_response("Hmm. POINTS: 4.25");
    rig.mock->enqueue_response("Better. POINTS: 3");
    const auto result = grade_submission(odt_from_text(read_fixture("question_8_1a.txt")), 8, registry_8(), rig.gateway);
    const auto& a = result.answers[0];
    EXPECT_TRUE(a.graded());
    EXPECT_EQ(a.awarded_points, HalfPoints::whole(3));
    EXPECT_EQ(a.feedback_text, "Better.");
    EXPECT_EQ(a.attempts, 2);
    ASSERT_EQ(a.audit_notes.size(), 1u);
    EXPECT_NE(a.audit_notes[0].find("PointsOffGrid"), std::string::npos);
}

TEST(GradeSubmission, ClampsAfterSecondMalformedGrade) {
    Rig rig;
    rig.mock->enqueue_response("POINTS: 2.2");
    rig.mock->enqueue_response("Generous. POINTS: 7");
    const auto result = grade_submission(odt_from_text(read_fixture("question_8_1a.txt")), 8, registry_8(), rig.gateway);
    const auto& a = result.answers[0];
    EXPECT_TRUE(a.graded());
    EXPECT_EQ(a.awarded_points, HalfPoints::whole(4));
    EXPECT_EQ(a.feedback_text, "Generous.");
    EXPECT_EQ(a.audit_notes.size(), 3u);
    EXPECT_NE(a.audit_notes.back().find("adjusted 7 to 4"), std::string::npos);
    EXPECT_EQ(rig.mock->calls(), 2);
}

TEST(GradeSubmission, MissingMarkerTwiceLeavesBlockUngraded) {
    Rig rig;
    rig.mock->enqueue_response("I refuse.");
    rig.mock->enqueue_response("Still no.");
    const auto result = grade_submission(odt_from_text(read_fixture("question_8_1a.txt")), 8, registry_8(), rig.gateway);
    const auto& a = result.answers[0];
    EXPECT_FALSE(a.graded());
    EXPECT_EQ(a.awarded_points, HalfPoints{});
    EXPECT_EQ(result.provider_failures, 0);
    const auto flat = odt::flatten_content(odt::read_content_part(result.merged_document)).text;
    EXPECT_NE(flat.find("UNGRADED: no POINTS statement in response"), std::string::npos);
    EXPECT_NE(flat.find("AWARDED: 0 / 4"), std::string::npos);
}

TEST(GradeSubmission, ProviderFailureFlagsOnlyThatBlock) {
    Rig rig;
    for (int i = 0; i < 3; ++i) rig.mock->enqueue(llm::MockProvider::Step::fail(llm::MockProvider::Step::Kind::Quota));
    rig.mock->set_default("fine POINTS: 6");
    const auto result = grade_submission(odt_from_text(two_block_text()), 2, registry_two(), rig.gateway);
    EXPECT_FALSE(result.answers[0].graded());
    EXPECT_EQ(result.answers[0].attempts, 3);
    EXPECT_TRUE(result.answers[1].graded());
    EXPECT_EQ(result.provider_failures, 1);
    EXPECT_EQ(result.total_awarded, HalfPoints::whole(6));
    EXPECT_DOUBLE_EQ(result.score_percent, 60.0);
}

TEST(GradeSubmission, DeterministicAcrossRuns) {
    const Bytes doc = odt_from_text(two_block_text());
    Bytes first;
    for (int run = 0; run < 2; ++run) {
        Rig rig;
        rig.mock->add_rule("first answer", "Fine. POINTS: 3.5");
        rig.mock->add_rule("second answer", "Partly. POINTS: 2");
        const auto result = grade_submission(doc, 2, registry_two(), rig.gateway);
        if (run == 0) first = result.merged_document;
        else EXPECT_EQ(result.merged_document, first);
    }
}

TEST(GradeSubmission, ParallelModeMatchesSequential) {
    Rig rig;
    rig.mock->add_rule("first answer", "a POINTS: 1");
    rig.mock->add_rule("second answer", "b POINTS: 2");
    GradingOptions parallel;
    parallel.parallelism = 4;
    const Bytes doc = odt_from_text(two_block_text());
    const auto seq = grade_submission(doc, 2, registry_two(), rig.gateway);
    const auto par = grade_submission(doc, 2, registry_two(), rig.gateway, parallel);
    EXPECT_EQ(seq.merged_document, par.merged_document);
    EXPECT_EQ(seq.score_percent, par.score_percent);
}

TEST(GradeSubmission, PromptsCarryNoIdentityStrings) {
    const privacy::StudentRegistry students({"max@uni.example"}, "salt", {{"max@uni.example", {"Max Mustermann", "4711"}}});
    Rig rig;
    rig.mock->set_default("POINTS: 1");
    std::string text = "Submitted by Max Mustermann (4711), max@uni.example\n" + two_block_text();
    text.replace(text.find("first answer"), 12, "MAX MUSTERMANN says yes");
    GradingOptions options;
    options.identity_strings = students.identity_strings("max@uni.example");
    const auto result = grade_submission(odt_from_text(text), 2, registry_two(), rig.gateway, options);
    ASSERT_EQ(rig.mock->calls(), 2);
    for (const auto& p : rig.mock->prompts()) {
        std::string lowered = p;
        for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        for (const auto& id : options.identity_strings) {
            std::string needle = id;
            for (auto& c : needle) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            EXPECT_EQ(lowered.find(needle), std::string::npos) << id;
        }
    }
    EXPECT_NE(rig.mock->prompts()[0].find("[REDACTED] says yes"), std::string::npos);
    // The returned document keeps the student's own text.
    const auto flat = odt::flatten_content(odt::read_content_part(result.merged_document)).text;
    EXPECT_NE(flat.find("MAX MUSTERMANN says yes"), std::string::npos);
}

TEST(ScorePercent, MatchesRationalOracle) {
    std::mt19937 rng(7);
    for (int i = 0; i < 5000; ++i) {
        const std::int64_t max = 1 + rng() % 400;
        const std::int64_t got = rng() % (max + 1);
        // Exact rational value, reduced, then one division.
        std::int64_t num = got * 100, den = max;
        const std::int64_t g = std::gcd(num, den);
        num /= g;
        den /= g;
        const double expected = static_cast<double>(num) / static_cast<double>(den);
        EXPECT_EQ(score_percent(HalfPoints::from_halves(got), HalfPoints::from_halves(max)), expected);
    }
    EXPECT_THROW(score_percent(HalfPoints{}, HalfPoints{}), std::invalid_argument);
}

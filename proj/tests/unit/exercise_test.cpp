#include <gtest/gtest.h>

#include "gradeloop/exercise_format/exercise.hpp"
#include "gradeloop/exercise_format/odt.hpp"
#include "test_support.hpp"

using namespace gradeloop;
using namespace gradeloop::exercise;
using gradeloop::testing::odt_from_text;
using gradeloop::testing::read_fixture;

namespace {

FormatError capture(std::string_view text) {
    try {
        extract_blocks(text, 1);
    } catch (const FormatError& e) {
        return e;
    }
    ADD_FAILURE() << "no FormatError for:\n" << text;
    return FormatError(FormatErrc::NoAnswerBlocks, "");
}

GradedAnswer grade(std::string id, double points, std::string feedback) {
    GradedAnswer g;
    g.answer_id = std::move(id);
    g.awarded_points = *HalfPoints::from_value(points);
    g.feedback_text = std::move(feedback);
    g.attempts = 1;
    return g;
}

}  // namespace

TEST(ClassifyMarker, RecognizesGrammar) {
    auto start = classify_marker("  ## Answer 8.1a Start ##  POINTS: 4 ##  ");
    ASSERT_TRUE(start);
    EXPECT_EQ(start->kind, MarkerKind::AnswerStart);
    EXPECT_EQ(start->id, "8.1a");
    EXPECT_EQ(start->points_token, "4");

    auto compact = classify_marker("##Answer 2 Start## POINTS:1.5");
    ASSERT_TRUE(compact);
    EXPECT_EQ(compact->points_token, "1.5");

    auto end = classify_marker("## Answer 8.1a End ##");
    ASSERT_TRUE(end);
    EXPECT_EQ(end->kind, MarkerKind::AnswerEnd);

    EXPECT_EQ(classify_marker("## Feedback 8.1a Start ##")->kind, MarkerKind::FeedbackStart);
    EXPECT_EQ(classify_marker("## Feedback 8.1a End ##")->kind, MarkerKind::FeedbackEnd);
}

TEST(ClassifyMarker, MidLineMarkerTextIsNotAMarker) {
    EXPECT_FALSE(classify_marker("I would write ## Answer 8.1a End ## here"));
    EXPECT_FALSE(classify_marker("## Answer 8.1a End ## and more"));
    EXPECT_FALSE(classify_marker("## answer 8.1a End ##"));
    EXPECT_FALSE(classify_marker("## Answer 8.1a Finish ##"));
    EXPECT_FALSE(classify_marker("## Answer  End ##"));
}

// Expected values frozen from tests/oracles/scan_blocks.py on fixtures/question_8_1a.txt.
TEST(ExtractBlocks, ExerciseFigureWithPlaceholder) {
    const ExercisePaper paper = extract_blocks(read_fixture("question_8_1a.txt"), 8);
    ASSERT_EQ(paper.blocks.size(), 1u);
    const AnswerBlock& b = paper.blocks[0];
    EXPECT_EQ(b.answer_id, "8.1a");
    EXPECT_EQ(b.max_points, HalfPoints::whole(4));
    EXPECT_EQ(b.student_answer, "");
    EXPECT_EQ(b.question_text.rfind("Question 8.1a) The following two quality assurance techniques", 0), 0u);
    EXPECT_EQ(paper.exercise_id, 8);
}

// Expected values frozen from tests/oracles/scan_blocks.py on fixtures/two_blocks.txt.
TEST(ExtractBlocks, TwoBlocksInSourceOrder) {
    const ExercisePaper paper = extract_blocks(read_fixture("two_blocks.txt"), 1);
    ASSERT_EQ(paper.blocks.size(), 2u);
    EXPECT_EQ(paper.blocks[0].answer_id, "1a");
    EXPECT_EQ(paper.blocks[0].max_points, HalfPoints::whole(2));
    EXPECT_EQ(paper.blocks[0].student_answer, "X");
    EXPECT_EQ(paper.blocks[0].question_text,
              "Exercise Sheet 1\nQuestion 1a) Name one dynamic quality assurance technique.");
    EXPECT_EQ(paper.blocks[1].answer_id, "1b");
    EXPECT_EQ(paper.blocks[1].max_points, HalfPoints::from_halves(7));
    EXPECT_EQ(paper.blocks[1].student_answer, "Y");
    EXPECT_EQ(paper.blocks[1].question_text, "Question 1b) Name one static quality assurance technique.");
    EXPECT_EQ(paper.total_max_points(), HalfPoints::from_halves(11));
    EXPECT_LT(paper.blocks[0].end_line, paper.blocks[1].start_line);
}

TEST(ExtractBlocks, MultiLineAnswerAndQuotedMarkers) {
    const std::string text =
        "Q1\n"
        "## Answer 1 Start ## POINTS: 3 ##\n"
        "first line\n"
        "I would close with ## Answer 1 End ## like this\n"
        "\n"
        "## Answer 1 End ##\n";
    const ExercisePaper paper = extract_blocks(text, 1);
    ASSERT_EQ(paper.blocks.size(), 1u);
    EXPECT_EQ(paper.blocks[0].student_answer, "first line\nI would close with ## Answer 1 End ## like this");
}

TEST(ExtractBlocks, ErrorCases) {
    auto mismatch = capture("## Answer 8.1a Start ## POINTS: 4 ##\nx\n## Answer 8.1b End ##\n");
    EXPECT_EQ(mismatch.code(), FormatErrc::MarkerIdMismatch);
    EXPECT_EQ(mismatch.subject(), "8.1a");
    EXPECT_EQ(mismatch.detail(), "8.1b");

    auto unclosed = capture("## Answer 3 Start ## POINTS: 4 ##\nx\n");
    EXPECT_EQ(unclosed.code(), FormatErrc::UnmatchedStartMarker);
    EXPECT_EQ(unclosed.subject(), "3");

    auto nested = capture("## Answer 3 Start ## POINTS: 4 ##\n## Answer 4 Start ## POINTS: 1 ##\n");
    EXPECT_EQ(nested.code(), FormatErrc::UnmatchedStartMarker);

    auto stray_end = capture("text\n## Answer 5 End ##\n");
    EXPECT_EQ(stray_end.code(), FormatErrc::UnmatchedEndMarker);
    EXPECT_EQ(stray_end.subject(), "5");

    auto dup = capture(
        "## Answer 1 Start ## POINTS: 1 ##\n## Answer 1 End ##\n"
        "## Answer 1 Start ## POINTS: 1 ##\n## Answer 1 End ##\n");
    EXPECT_EQ(dup.code(), FormatErrc::DuplicateAnswerId);

    EXPECT_EQ(capture("## Answer 1 Start ## POINTS: 4.25 ##\n## Answer 1 End ##\n").code(),
              FormatErrc::InvalidPointsToken);
    EXPECT_EQ(capture("## Answer 1 Start ## POINTS: 0 ##\n## Answer 1 End ##\n").code(),
              FormatErrc::InvalidPointsToken);
    EXPECT_EQ(capture("## Answer 1 Start ## POINTS: four ##\n## Answer 1 End ##\n").subject(), "four");
    EXPECT_EQ(capture("## Answer 1 Start ##\n## Answer 1 End ##\n").code(), FormatErrc::InvalidPointsToken);
    EXPECT_EQ(capture("just prose\n").code(), FormatErrc::NoAnswerBlocks);
}

TEST(ExtractBlocks, HalfStepAndOptionalTrailingHashes) {
    const auto paper = extract_blocks("## Answer a Start ## POINTS: 2.5\nans\n## Answer a End ##\n", 1);
    EXPECT_EQ(paper.blocks[0].max_points, HalfPoints::from_halves(5));
}

TEST(ExtractBlocks, FeedbackSectionsAreNotQuestionText) {
    const std::string text =
        "Q1\n## Answer 1 Start ## POINTS: 2 ##\nA\n## Answer 1 End ##\n"
        "## Feedback 1 Start ##\nNice.\n## Answer 9 End ##\nAWARDED: 2 / 2\n## Feedback 1 End ##\n"
        "Q2\n## Answer 2 Start ## POINTS: 2 ##\nB\n## Answer 2 End ##\n";
    const auto paper = extract_blocks(text, 1);
    ASSERT_EQ(paper.blocks.size(), 2u);
    EXPECT_EQ(paper.blocks[1].question_text, "Q2");
}

TEST(MergeFeedback, InsertsAwardedLineAfterEndMarker) {
    const Bytes doc = odt_from_text(read_fixture("question_8_1a.txt"));
    const ExercisePaper paper = parse_exercise(doc, 8);
    const std::vector<GradedAnswer> grades{grade("8.1a", 4, "Correct.")};
    const std::string text = odt::parse_odt(merge_feedback(paper, grades, doc));
    const auto end = text.find("## Answer 8.1a End ##");
    const auto awarded = text.find("AWARDED: 4 / 4");
    ASSERT_NE(awarded, std::string::npos);
    EXPECT_LT(end, awarded);
    EXPECT_NE(text.find("Correct."), std::string::npos);
}

TEST(MergeFeedback, EmptyFeedbackStillAwardsZero) {
    const Bytes doc = odt_from_text(read_fixture("question_8_1a.txt"));
    const ExercisePaper paper = parse_exercise(doc, 8);
    const std::vector<GradedAnswer> grades{grade("8.1a", 0, "")};
    EXPECT_NE(odt::parse_odt(merge_feedback(paper, grades, doc)).find("AWARDED: 0 / 4"), std::string::npos);
}

TEST(MergeFeedback, TwoBlockRoundTrip) {
    const Bytes doc = odt_from_text(read_fixture("two_blocks.txt"));
    const ExercisePaper paper = parse_exercise(doc, 1);
    const std::vector<GradedAnswer> grades{grade("1b", 1.5, "Partly.\n## Answer 1b End ##"),
                                           grade("1a", 2, "Fine.")};
    const Bytes merged = merge_feedback(paper, grades, doc);
    const ExercisePaper again = parse_exercise(merged, 1);
    ASSERT_EQ(again.blocks.size(), paper.blocks.size());
    for (std::size_t i = 0; i < paper.blocks.size(); ++i) {
        EXPECT_EQ(again.blocks[i].answer_id, paper.blocks[i].answer_id);
        EXPECT_EQ(again.blocks[i].max_points, paper.blocks[i].max_points);
        EXPECT_EQ(again.blocks[i].student_answer, paper.blocks[i].student_answer);
        EXPECT_EQ(again.blocks[i].question_text, paper.blocks[i].question_text);
    }
    const std::string text = odt::parse_odt(merged);
    EXPECT_NE(text.find("> ## Answer 1b End ##"), std::string::npos);
    EXPECT_NE(text.find("AWARDED: 1.5 / 3.5"), std::string::npos);
}

TEST(MergeFeedback, OriginalParagraphsStayByteIdentical) {
    const Bytes doc = odt_from_text(read_fixture("two_blocks.txt"));
    const ExercisePaper paper = parse_exercise(doc, 1);
    const std::vector<GradedAnswer> grades{grade("1a", 2, "a"), grade("1b", 3, "b")};
    const std::string before = odt::read_content_part(doc);
    const std::string after = odt::read_content_part(merge_feedback(paper, grades, doc));
    const auto flat = odt::flatten_content(before);
    std::size_t cursor = 0;
    for (const auto& p : flat.paragraphs) {
        const std::string original = before.substr(p.begin, p.end - p.begin);
        const auto found = after.find(original, cursor);
        ASSERT_NE(found, std::string::npos) << original;
        cursor = found + original.size();
    }
}

TEST(MergeFeedback, RejectsMismatchedGrades) {
    const Bytes doc = odt_from_text(read_fixture("two_blocks.txt"));
    const ExercisePaper paper = parse_exercise(doc, 1);
    auto code_of = [&](std::vector<GradedAnswer> grades) {
        try {
            merge_feedback(paper, grades, doc);
        } catch (const FormatError& e) {
            return e.code();
        }
        return FormatErrc::NoAnswerBlocks;
    };
    EXPECT_EQ(code_of({grade("1a", 1, "")}), FormatErrc::GradeBlockMismatch);
    EXPECT_EQ(code_of({grade("1a", 1, ""), grade("1a", 1, "")}), FormatErrc::GradeBlockMismatch);
    EXPECT_EQ(code_of({grade("1a", 1, ""), grade("zz", 1, "")}), FormatErrc::GradeBlockMismatch);
}

TEST(MergeFeedback, UngradedBlockIsFlagged) {
    const Bytes doc = odt_from_text(read_fixture("question_8_1a.txt"));
    const ExercisePaper paper = parse_exercise(doc, 8);
    GradedAnswer g = grade("8.1a", 0, "");
    g.ungraded_reason = "ProviderUnavailable";
    const std::vector<GradedAnswer> grades{g};
    const std::string text = odt::parse_odt(merge_feedback(paper, grades, doc));
    EXPECT_NE(text.find("UNGRADED: ProviderUnavailable\nAWARDED: 0 / 4"), std::string::npos);
}

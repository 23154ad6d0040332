#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "gradeloop/prompt_engine/prompt.hpp"
#include "gradeloop/prompt_engine/solution_registry.hpp"

using namespace gradeloop;
using namespace gradeloop::prompt;

namespace {

GradingTask task_8_1a(MatchPolicy policy) {
    GradingTask t;
    t.question_text =
        "Explain which of the two techniques you would use in a project that has an extremely short deadline.";
    t.model_answer =
        "While testing and debugging is more effective (15 vs 10 defects), one should use code review, because it "
        "has a higher efficiency (2.0 vs 1.5).";
    t.student_answer = "Code review, it finds more defects per hour.";
    t.max_points = HalfPoints::whole(4);
    t.policy = policy;
    return t;
}

/// Text of one section: from its tag up to the next tag (or the end).
std::string section(const std::string& prompt, std::string_view tag) {
    const auto begin = prompt.find(tag);
    if (begin == std::string::npos) return {};
    std::size_t end = std::string::npos;
    for (auto other : kSections) {
        const auto at = prompt.find(other, begin + tag.size());
        if (at != std::string::npos && at < end) end = at;
    }
    return prompt.substr(begin + tag.size(), end == std::string::npos ? std::string::npos : end - begin - tag.size());
}

RegistryErrc registry_error(std::string_view text) {
    try {
        SolutionRegistry::parse(text);
    } catch (const RegistryError& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return RegistryErrc::Syntax;
}

}  // namespace

TEST(RenderPrompt, CloseMatchOutputSection) {
    const std::string prompt = render_prompt(task_8_1a(MatchPolicy::close_match()));
    const std::string output = section(prompt, "<Output>");
    EXPECT_NE(output.find("'POINTS:'"), std::string::npos);
    EXPECT_NE(output.find("from 0 = everything wrong, to 4 = everything correct"), std::string::npos);
    EXPECT_NE(output.find("precision of 0.5 points"), std::string::npos);
    EXPECT_NE(output.find("Even for an empty submission, award 0 points"), std::string::npos);
    EXPECT_NE(section(prompt, "<Context>").find("are all expected"), std::string::npos);
}

TEST(RenderPrompt, RoleCarriesLeniencyAndNoSpellCheck) {
    const std::string role = section(render_prompt(task_8_1a(MatchPolicy::flexible_match())), "<Role>");
    EXPECT_NE(role.find("minor errors or inaccuracies have no impact"), std::string::npos);
    EXPECT_NE(role.find("Spelling and grammar should NOT be corrected"), std::string::npos);
}

TEST(RenderPrompt, SectionsAlwaysInOrder) {
    for (auto policy : {MatchPolicy::close_match(), MatchPolicy::partial_match(2), MatchPolicy::flexible_match()}) {
        const std::string prompt = render_prompt(task_8_1a(policy));
        std::size_t cursor = 0;
        for (auto tag : kSections) {
            const auto at = prompt.find(tag, cursor);
            ASSERT_NE(at, std::string::npos) << tag;
            EXPECT_EQ(prompt.find(tag, at + 1), std::string::npos) << tag;
            cursor = at;
        }
    }
}

TEST(RenderPrompt, PartialMatchStatesThreshold) {
    const std::string prompt = render_prompt(task_8_1a(MatchPolicy::partial_match(2)));
    EXPECT_NE(section(prompt, "<Context>").find("at least 2 of"), std::string::npos);
    EXPECT_NE(section(prompt, "<Action>").find("at least 2 of"), std::string::npos);
}

TEST(RenderPrompt, FlexibleMatchWording) {
    const std::string context = section(render_prompt(task_8_1a(MatchPolicy::flexible_match())), "<Context>");
    EXPECT_NE(context.find("is only an example"), std::string::npos);
    EXPECT_NE(context.find("gist of the answer is maintained"), std::string::npos);
}

TEST(RenderPrompt, OnlyContextAndActionVaryByPolicy) {
    const std::string close = render_prompt(task_8_1a(MatchPolicy::close_match()));
    const std::string flexible = render_prompt(task_8_1a(MatchPolicy::flexible_match()));
    for (auto tag : {"<Role>", "<Output>", "<Question>", "<Model Answer>", "<Student Solution>"})
        EXPECT_EQ(section(close, tag), section(flexible, tag)) << tag;
    EXPECT_NE(section(close, "<Context>"), section(flexible, "<Context>"));
}

TEST(RenderPrompt, EmptyStudentAnswerStillRenders) {
    GradingTask t = task_8_1a(MatchPolicy::close_match());
    t.student_answer.clear();
    const std::string prompt = render_prompt(t);
    const auto at = prompt.rfind("<Student Solution>");
    ASSERT_NE(at, std::string::npos);
    EXPECT_EQ(prompt.substr(at), "<Student Solution>");
}

TEST(RenderPrompt, DeterministicAndNotReexpanded) {
    GradingTask t = task_8_1a(MatchPolicy::close_match());
    t.student_answer = "sneaky {{model_answer}} {{max_points}}";
    const std::string a = render_prompt(t);
    EXPECT_EQ(a, render_prompt(t));
    EXPECT_NE(a.find("sneaky {{model_answer}} {{max_points}}"), std::string::npos);
}

TEST(PromptTemplates, ValidationRejectsBrokenTemplates) {
    const std::string good = "<Role>r <Context>c <Action>a <Output>{{max_points}} <Question>{{question}} "
                             "<Model Answer>{{model_answer}} <Student Solution>{{student_answer}}";
    EXPECT_NO_THROW(PromptTemplates(good, good, good));
    EXPECT_THROW(PromptTemplates(good + "{{who}}", good, good), TemplateError);
    EXPECT_THROW(PromptTemplates(good + "{{n}}", good, good), TemplateError);
    EXPECT_NO_THROW(PromptTemplates(good, good + "{{n}}", good));
    EXPECT_THROW(PromptTemplates("<Context> <Role>" + good.substr(6), good, good), TemplateError);
    EXPECT_THROW(PromptTemplates(good + "<Role>", good, good), TemplateError);
    EXPECT_THROW(PromptTemplates(good + "{{oops", good, good), TemplateError);
}

TEST(PromptTemplates, LoadsShippedAssetDirectory) {
    const auto loaded = PromptTemplates::load_directory(GRADELOOP_ASSET_DIR "/prompts/en");
    const GradingTask t = task_8_1a(MatchPolicy::partial_match(3));
    EXPECT_EQ(loaded.render(t), render_prompt(t));
}

TEST(MatchPolicy, PartialNeedsPositiveN) {
    EXPECT_THROW(MatchPolicy::partial_match(0), std::invalid_argument);
    EXPECT_EQ(MatchPolicy::partial_match(1).min_elements(), 1);
    EXPECT_FALSE(MatchPolicy::close_match().min_elements());
}

TEST(SolutionRegistry, LoadsSingleEntry) {
    const auto registry = SolutionRegistry::parse(
        "# sheet 8\n"
        "[solution]\n"
        "exercise_id: 8\n"
        "answer_id: 8.1a\n"
        "max_points: 4\n"
        "mode: close\n"
        "model_answer: <<<\n"
        "Use code review.\n"
        "\n"
        "It is more efficient.\n"
        ">>>\n");
    ASSERT_EQ(registry.size(), 1u);
    const auto* e = registry.find(8, "8.1a");
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(e->model_answer, "Use code review.\n\nIt is more efficient.");
    EXPECT_EQ(e->max_points, HalfPoints::whole(4));
    EXPECT_EQ(e->policy, MatchPolicy::close_match());
    EXPECT_EQ(registry.find(8, "8.1b"), nullptr);
}

TEST(SolutionRegistry, PolicyVariants) {
    const auto registry = SolutionRegistry::parse(
        "[solution]\nexercise_id: 1\nanswer_id: a\nmax_points: 2.5\nmode: partial\nn: 2\nmodel_answer: x\n"
        "[solution]\nexercise_id: 1\nanswer_id: b\nmax_points: 1\nmode: Flexible\nmodel_answer: y\n");
    EXPECT_EQ(registry.find(1, "a")->policy, MatchPolicy::partial_match(2));
    EXPECT_EQ(registry.find(1, "b")->policy, MatchPolicy::flexible_match());
    EXPECT_EQ(SolutionRegistry::parse(registry.to_text()).entries().size(), 2u);
}

TEST(SolutionRegistry, Errors) {
    const std::string entry = "[solution]\nexercise_id: 8\nanswer_id: 8.1a\nmax_points: 4\nmode: close\nmodel_answer: x\n";
    EXPECT_EQ(registry_error(entry + entry), RegistryErrc::DuplicateSolutionKey);
    EXPECT_EQ(registry_error("[solution]\nexercise_id: 8\nanswer_id: a\nmax_points: 4\nmode: partial\nmodel_answer: x\n"),
              RegistryErrc::MissingField);
    try {
        SolutionRegistry::parse("[solution]\nexercise_id: 8\nanswer_id: a\nmax_points: 4\nmode: partial\nmodel_answer: x\n");
    } catch (const RegistryError& e) {
        EXPECT_EQ(e.subject(), "n");
    }
    EXPECT_EQ(registry_error("[solution]\nexercise_id: 8\nanswer_id: a\nmax_points: 4\nmode: strict\nmodel_answer: x\n"),
              RegistryErrc::InvalidPolicy);
    EXPECT_EQ(registry_error("[solution]\nexercise_id: 8\nanswer_id: a\nmax_points: 4\nmode: close\nn: 2\nmodel_answer: x\n"),
              RegistryErrc::InvalidPolicy);
    EXPECT_EQ(registry_error("[solution]\nexercise_id: 8\nanswer_id: a\nmax_points: 4.2\nmode: close\nmodel_answer: x\n"),
              RegistryErrc::InvalidValue);
    EXPECT_EQ(registry_error("[solution]\nexercise_id: 8\nanswer_id: a\nmax_points: 4\nmode: close\n"),
              RegistryErrc::MissingField);
    EXPECT_EQ(registry_error("exercise_id: 8\n"), RegistryErrc::Syntax);
    EXPECT_EQ(registry_error("[solution]\ncolour: red\n"), RegistryErrc::Syntax);
    EXPECT_EQ(registry_error("[solution]\nmodel_answer: <<<\nnever closed\n"), RegistryErrc::Syntax);
}

TEST(SolutionRegistry, EveryEntryRenders) {
    const auto registry = SolutionRegistry::parse(
        "[solution]\nexercise_id: 1\nanswer_id: a\nmax_points: 2.5\nmode: partial\nn: 2\nmodel_answer: x\n"
        "[solution]\nexercise_id: 1\nanswer_id: b\nmax_points: 1\nmode: flexible\nmodel_answer: y\n"
        "[solution]\nexercise_id: 2\nanswer_id: a\nmax_points: 6\nmode: close\nmodel_answer: z\n");
    for (const auto& [key, e] : registry.entries()) {
        GradingTask t{"q", e.model_answer, "", e.max_points, e.policy};
        EXPECT_NE(render_prompt(t).find("to " + e.max_points.to_string() + " = everything correct"),
                  std::string::npos);
    }
}

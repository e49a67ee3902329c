#include <gtest/gtest.h>

#include <random>

#include "craftagent/prompts.hpp"
#include "util.hpp"

using namespace craftagent;
using testutil::fixture;

namespace {

const std::vector<std::string> kHistory = {"harvest log", "craft planks", "find log nearby"};
const char* kReq = "3.0 planks; 2.0 stick; 1.0 crafting_table_nearby";

PromptBundle decision() { return render_decision("craft_wooden_pickaxe", "4.0 planks", "1.0 log_nearby", kHistory, kReq); }

Feedback stick_feedback() { return {{Deficit{{"planks", 2}, 1, 1}}, "craft stick"}; }

Container furnace_inventory(int cobble) {
    Container c;
    c.add("log", 2);
    c.add("dirt", 3);
    c.add("cobblestone", cobble);
    return c;
}

const std::vector<Requirement> kFurnaceReqs = {{"cobblestone", 8}, {"crafting_table_nearby", 1}};

}  // namespace

TEST(Prompts, DecisionGolden) { EXPECT_EQ(decision().text, fixture("prompts/decision.txt")); }

TEST(Prompts, RevisionGolden) {
    PromptBundle r = render_revision(decision(), "get sticks", "craft stick", "1.0 planks", "1.0 log_nearby", stick_feedback());
    EXPECT_EQ(r.text, fixture("prompts/revision.txt"));
    EXPECT_EQ(r.kind, PromptKind::revision);
}

TEST(Prompts, TwoDeficitReason) {
    Feedback fb{{Deficit{{"stick", 2}, 0, 2}, Deficit{{"crafting_table_nearby", 1}, 0, 1}}, "craft wooden pickaxe"};
    EXPECT_EQ(speculated_reason(fb), fixture("prompts/reason_two_deficits.txt"));
}

TEST(Prompts, ReasonQuotesFullRequirementNotShortfall) {
    Feedback fb{{Deficit{{"cobblestone", 8}, 4, 4}}, "craft furnace"};
    EXPECT_NE(speculated_reason(fb).find("consume 8 cobblestone"), std::string::npos);
}

TEST(Prompts, CotGolden) {
    EXPECT_EQ(render_cot("craft_wooden_pickaxe", kReq, "4.0 planks", "1.0 log_nearby").text,
              fixture("prompts/cot.txt"));
}

TEST(Prompts, DatasetPairGolden) {
    auto [in, out] = render_dataset_pair("craft_wooden_pickaxe", "4.0 planks", "1.0 log_nearby", kHistory, kReq,
                                         "craft planks");
    EXPECT_EQ(in, fixture("prompts/dataset_input.txt"));
    EXPECT_EQ(out, fixture("prompts/dataset_output.txt"));
}

TEST(Prompts, GapReportsMatchTemplateExamples) {
    Container near_cobble, near_table;
    near_cobble.add("cobblestone_nearby", 1);
    near_table.add("crafting_table_nearby", 1);
    auto unmet = compute_gaps(kFurnaceReqs, furnace_inventory(4), near_cobble);
    EXPECT_FALSE(unmet.all_met);
    EXPECT_EQ(render_gap_report(unmet, "craft furnace"), fixture("prompts/gap_unmet.txt"));
    auto met = compute_gaps(kFurnaceReqs, furnace_inventory(11), near_table);
    EXPECT_TRUE(met.all_met);
    EXPECT_EQ(render_gap_report(met, "craft furnace"), fixture("prompts/gap_met.txt"));
}

TEST(Prompts, GapEmbeddedInCotMatchesStandalone) {
    // The CoT template carries both worked examples verbatim.
    std::string cot(kCotTemplate);
    EXPECT_NE(cot.find(fixture("prompts/gap_unmet.txt")), std::string::npos);
    EXPECT_NE(cot.find(fixture("prompts/gap_met.txt")), std::string::npos);
}

TEST(Prompts, EmptyRequirementsAreMet) {
    auto g = compute_gaps({}, Container{}, Container{});
    EXPECT_TRUE(g.all_met);
    EXPECT_TRUE(g.lines.empty());
    EXPECT_EQ(render_gap_report(g, "craft stick"), "Therefore, all requirements are met, so one can craft stick directly.");
}

TEST(Prompts, NearbyItemInInventoryDoesNotCount) {
    Container inv;
    inv.add("crafting_table_nearby", 1);
    auto g = compute_gaps({{"crafting_table_nearby", 1}}, inv, Container{});
    EXPECT_FALSE(g.all_met);
    EXPECT_EQ(g.lines[0].still_require, Quantity(1));
}

TEST(Prompts, HistoryRendering) {
    EXPECT_EQ(render_history({}), "none");
    EXPECT_EQ(render_history({"a"}), "a");
    EXPECT_THROW(render_history({"a", "b", "c", "d"}), std::invalid_argument);
    EXPECT_NE(render_decision("t", "nothing", "nothing", {}, "nothing").text.find("executed: none\n"), std::string::npos);
}

TEST(Prompts, RevisionNeedsFeedback) {
    EXPECT_THROW(render_revision(decision(), "x", "craft stick", "nothing", "nothing", Feedback{{}, "craft stick"}),
                 std::invalid_argument);
}

TEST(Prompts, RequirementRendering) {
    EXPECT_EQ(render_requirements({}), "nothing");
    EXPECT_EQ(render_requirements({{"planks", 3}, {"stick", Quantity(1, 2)}}), "3.0 planks; 0.5 stick");
}

TEST(Prompts, FillTemplateIsSinglePass) {
    EXPECT_EQ(fill_template("a {{x}} b", {{"x", "{{y}}"}}), "a {{y}} b");
    EXPECT_THROW(fill_template("{{missing}}", {}), std::logic_error);
    EXPECT_THROW(fill_template("{{open", {}), std::logic_error);
}

TEST(Prompts, RerenderReproducesEveryKind) {
    PromptBundle d = decision();
    PromptBundle c = render_cot("craft_bowl", "3.0 planks; 1.0 crafting_table_nearby", "nothing", "nothing");
    PromptBundle r = render_revision(d, "get sticks", "craft stick", "1.0 planks", "1.0 log_nearby", stick_feedback());
    PromptBundle r2 = render_revision(r, "craft sticks", "craft stick", "1.0 planks", "1.0 log_nearby", stick_feedback());
    PromptBundle m = render_malformed_revision(c, "I am not sure.");
    for (const PromptBundle* b : {&d, &c, &r, &r2, &m}) {
        EXPECT_EQ(rerender(*b), b->text);
        EXPECT_EQ(b->text.find("{{"), std::string::npos);
    }
    EXPECT_EQ(r2.text.rfind(r.text, 0), 0u);
}

TEST(Prompts, DraftAfterCotGetsItsOwnCue) {
    PromptBundle c = render_cot("craft_bowl", "3.0 planks", "nothing", "nothing");
    PromptBundle m = render_malformed_revision(c, "Next skill");
    EXPECT_NE(m.text.find("Next skill: skill name\nYour output: Next skill\n"), std::string::npos);
}

// Brute-force comparator: smallest top-up that satisfies each requirement.
TEST(Prompts, RandomGapChecksAgreeWithBruteForce) {
    std::mt19937_64 rng(2024);
    const std::vector<std::string> items = {"log", "planks", "stick", "cobblestone", "crafting_table_nearby",
                                            "furnace_nearby", "iron_ore"};
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Requirement> reqs;
        Container inv, surr;
        for (const auto& it : items) {
            if (rng() % 2) reqs.push_back({it, static_cast<std::int64_t>(1 + rng() % 9)});
            if (rng() % 2) (is_nearby(it) ? surr : inv).add(it, static_cast<std::int64_t>(rng() % 10));
            if (rng() % 4 == 0) (is_nearby(it) ? inv : surr).add(it, static_cast<std::int64_t>(rng() % 10));
        }
        auto g = compute_gaps(reqs, inv, surr);
        ASSERT_EQ(g.lines.size(), reqs.size());
        bool all = true;
        for (std::size_t i = 0; i < reqs.size(); ++i) {
            const Container& home = is_nearby(reqs[i].item) ? surr : inv;
            std::int64_t k = 0;
            while (home.get(reqs[i].item) + Quantity(k) < reqs[i].quantity) ++k;
            EXPECT_EQ(g.lines[i].still_require, Quantity(k));
            EXPECT_EQ(g.lines[i].have, home.get(reqs[i].item));
            all = all && k == 0;
        }
        EXPECT_EQ(g.all_met, all);
    }
}

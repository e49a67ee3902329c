#include <gtest/gtest.h>

#include <random>

#include "craftagent/retrieval.hpp"
#include "util.hpp"

using namespace craftagent;
using testutil::default_world;

namespace {

std::string pick(const std::string& raw) {
    static const LexicalSimilarity sim;
    return retrieve(parse_output(raw), default_world(), sim).description;
}

// Counts trigram matches by brute force over positions.
double trigram_dice_oracle(const std::string& a, const std::string& b) {
    std::vector<std::string> ga, gb;
    for (std::size_t i = 0; i + 3 <= a.size(); ++i) ga.push_back(a.substr(i, 3));
    for (std::size_t i = 0; i + 3 <= b.size(); ++i) gb.push_back(b.substr(i, 3));
    std::vector<bool> used(gb.size(), false);
    int common = 0;
    for (const auto& g : ga)
        for (std::size_t j = 0; j < gb.size(); ++j)
            if (!used[j] && gb[j] == g) {
                used[j] = true;
                ++common;
                break;
            }
    return 2.0 * common / static_cast<double>(ga.size() + gb.size());
}

}  // namespace

TEST(Parse, ExtractsSkillAfterMarker) {
    auto p = parse_output("I have logs.\nNext skill: Craft Planks\nthanks");
    EXPECT_EQ(p.text, "craft planks");
    EXPECT_EQ(p.verb, "craft");
    EXPECT_EQ(p.noun_phrase, (std::vector<std::string>{"planks"}));
}

TEST(Parse, LastMarkerWins) {
    EXPECT_EQ(parse_output("Next skill: skill name\n...\nNext skill: harvest log").text, "harvest log");
}

TEST(Parse, BareAnswerWithoutMarker) {
    auto p = parse_output("  get sticks ");
    EXPECT_EQ(p.text, "get sticks");
    EXPECT_EQ(p.verb, "get");
}

TEST(Parse, UnknownVerb) { EXPECT_EQ(parse_output("Next skill: build table").verb, "unknown"); }

TEST(Parse, SkipsBlankLinesAfterMarker) { EXPECT_EQ(parse_output("Next skill:\n\n  mine iron ore").text, "mine iron ore"); }

TEST(Parse, EmptyIsMalformed) {
    EXPECT_THROW(parse_output(""), MalformedOutput);
    EXPECT_THROW(parse_output("Next skill:"), MalformedOutput);
    EXPECT_THROW(parse_output("Next skill: ..."), MalformedOutput);
}

TEST(Retrieval, Regressions) {
    EXPECT_EQ(pick("Next skill: craft wooden planks"), "craft planks");
    EXPECT_EQ(pick("Next skill: get sticks"), "craft stick");
    EXPECT_EQ(pick("Next skill: harvest wood"), "harvest log");
    EXPECT_EQ(pick("Next skill: craft crafting table"), "craft crafting table");
    EXPECT_EQ(pick("Next skill: place crafting table nearby"), "place crafting table nearby");
}

TEST(Retrieval, EverySkillRetrievesItself) {
    for (const auto& s : default_world().skills) EXPECT_EQ(pick("Next skill: " + s.description), s.description);
}

TEST(Retrieval, NounOverlapBeatsSurfaceSimilarity) {
    // only entries sharing a noun survive stage one
    Retriever r({"craft stick", "craft stone sword"}, {});
    LexicalSimilarity sim;
    EXPECT_EQ(r.retrieve(parse_output("craft sticks"), sim), "craft stick");
    auto c = r.candidates(parse_output("craft sticks"));
    EXPECT_EQ(c, (std::vector<std::size_t>{0}));
}

TEST(Retrieval, FallsBackToWholeCatalog) {
    Retriever r({"craft planks", "mine iron ore"}, {});
    EXPECT_FALSE(r.candidates(parse_output("craft planks")).empty());
    EXPECT_TRUE(r.candidates(parse_output("do something")).empty());
    EXPECT_EQ(r.retrieve(parse_output("mine something"), LexicalSimilarity{}), "mine iron ore");
}

TEST(Retrieval, TiesBreakAlphabetically) {
    struct Flat : SimilarityProvider {
        double score(const std::string&, const std::string&) const override { return 0.5; }
    };
    Retriever r({"harvest log", "find log nearby"}, {});
    EXPECT_EQ(r.retrieve(parse_output("log"), Flat{}), "find log nearby");
}

TEST(Similarity, HandComputedValues) {
    EXPECT_NEAR(lexical_similarity("craft planks", "craft plank"), 0.25 + 0.5 * 18.0 / 19.0, 1e-12);
    EXPECT_NEAR(lexical_similarity("craft planks", "craft sword"), 0.25 + 0.5 * 8.0 / 19.0, 1e-12);
    EXPECT_DOUBLE_EQ(lexical_similarity("harvest log", "harvest log"), 1.0);
}

TEST(Similarity, SynonymsNormalize) {
    EXPECT_DOUBLE_EQ(lexical_similarity("harvest wood", "harvest log", {{"wood", "log"}}), 1.0);
}

TEST(Similarity, TrigramTermAgreesWithOracle) {
    // Distinct words on both sides keep the word term at 0, isolating the trigram part.
    std::mt19937_64 rng(5);
    const std::string alpha = "abcde";
    for (int i = 0; i < 300; ++i) {
        std::string a(3 + rng() % 6, ' '), b(3 + rng() % 6, ' ');
        for (auto& c : a) c = alpha[rng() % alpha.size()];
        for (auto& c : b) c = alpha[rng() % alpha.size()];
        if (a == b) continue;
        EXPECT_NEAR(lexical_similarity(a, b), 0.5 * trigram_dice_oracle(a, b), 1e-12) << a << " / " << b;
    }
}

TEST(Similarity, SymmetricAndBounded) {
    const auto& skills = default_world().skills;
    for (std::size_t i = 0; i < skills.size(); ++i)
        for (std::size_t j = 0; j < skills.size(); ++j) {
            double s = lexical_similarity(skills[i].description, skills[j].description);
            EXPECT_GE(s, 0.0);
            EXPECT_LE(s, 1.0);
            EXPECT_DOUBLE_EQ(s, lexical_similarity(skills[j].description, skills[i].description));
            if (i == j) EXPECT_DOUBLE_EQ(s, 1.0);
        }
}

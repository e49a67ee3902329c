#include <gtest/gtest.h>

#include <deque>
#include <map>
#include <random>
#include <set>

#include "craftagent/planner.hpp"
#include "craftagent/world.hpp"
#include "util.hpp"

using namespace craftagent;
using testutil::default_world;

namespace {

// Plain breadth-first search over inventories, all skills succeeding. Only skills whose
// products lie in the backward closure of the goal (over every producer) are tried.
int bfs_plan_length(const WorldModel& w, const TaskDef& t, int depth_limit = 14) {
    std::set<std::string> closure{t.goal.item};
    std::deque<std::string> todo{t.goal.item};
    while (!todo.empty()) {
        std::string item = todo.front();
        todo.pop_front();
        for (const auto& s : w.skills)
            for (const auto& p : s.produces)
                if (p.item == item)
                    for (const auto& r : s.preconditions)
                        if (closure.insert(r.item).second) todo.push_back(r.item);
    }
    std::vector<const Skill*> useful;
    for (const auto& s : w.skills)
        for (const auto& p : s.produces)
            if (closure.count(p.item)) {
                useful.push_back(&s);
                break;
            }

    using State = std::map<std::string, Quantity>;
    State start;
    for (const auto& r : t.initial_inventory) start[r.item] += r.quantity;
    auto have = [](const State& s, const std::string& i) {
        auto it = s.find(i);
        return it == s.end() ? Quantity(0) : it->second;
    };
    auto key = [](const State& s) {
        std::string k;
        for (const auto& [i, q] : s)
            if (q.positive()) k += i + "=" + q.exact() + ",";
        return k;
    };
    std::deque<std::pair<State, int>> q{{start, 0}};
    std::set<std::string> seen{key(start)};
    while (!q.empty()) {
        auto [s, d] = q.front();
        q.pop_front();
        if (have(s, t.goal.item) >= t.goal.quantity) return d;
        if (d >= depth_limit) continue;
        for (const Skill* sk : useful) {
            bool ok = true;
            for (const auto& r : sk->preconditions) ok = ok && have(s, r.item) >= r.quantity;
            if (!ok) continue;
            State n = s;
            for (const auto& c : sk->consumes) n[c.item] -= c.quantity;
            for (const auto& p : sk->produces) n[p.item] += p.quantity;
            if (seen.insert(key(n)).second) q.push_back({n, d + 1});
        }
    }
    return -1;
}

const char* kTinyWorld = R"({
  "items": ["log", "planks", "stick"],
  "skills": [
    {"description": "harvest log", "kind": "manipulate", "preconditions": [], "consumes": [],
     "produces": [{"item": "log", "quantity": 1}], "success_prob": 1.0, "step_cost": 1},
    {"description": "craft planks", "kind": "craft", "preconditions": [{"item": "log", "quantity": 1}],
     "consumes": [{"item": "log", "quantity": 1}], "produces": [{"item": "planks", "quantity": 4}],
     "success_prob": 1.0, "step_cost": 1},
    {"description": "craft stick", "kind": "craft", "preconditions": [{"item": "planks", "quantity": 2}],
     "consumes": [{"item": "planks", "quantity": 2}], "produces": [{"item": "stick", "quantity": 4}],
     "success_prob": 1.0, "step_cost": 1}
  ],
  "tasks": [
    {"name": "harvest_log", "family": "log", "goal": {"item": "log", "quantity": 1}, "requirements": [],
     "biome": "forest", "max_steps": 100, "initial_inventory": []},
    {"name": "craft_stick", "family": "log", "goal": {"item": "stick", "quantity": 1},
     "requirements": [{"item": "planks", "quantity": 2}], "biome": "forest", "max_steps": 100,
     "initial_inventory": []}
  ],
  "synonyms": {"wood": "log"}
})";

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
    auto p = s.find(from);
    EXPECT_NE(p, std::string::npos) << from;
    return s.replace(p, from.size(), to);
}

}  // namespace

TEST(World, DefaultWorldLoads) {
    const auto& w = default_world();
    EXPECT_EQ(w.skills.size(), 55u);
    EXPECT_EQ(w.tasks.size(), 40u);
    std::map<std::string, int> families;
    for (const auto& t : w.tasks) families[t.family]++;
    EXPECT_EQ(families["log"], 10);
    EXPECT_EQ(families["stone"], 10);
    EXPECT_EQ(families["mob"], 10);
    EXPECT_EQ(families["iron"], 10);
    EXPECT_EQ(w.synonyms.at("wood"), "log");
}

TEST(World, EvaluationTasksAverageElevenAndAHalfSteps) {
    const auto& w = default_world();
    std::int64_t sum = 0, lo = 1 << 30, hi = 0;
    int n = 0;
    for (const auto& t : w.tasks) {
        if (t.family == "iron") continue;
        auto m = min_plan_length(w, t);
        sum += m;
        lo = std::min(lo, m);
        hi = std::max(hi, m);
        ++n;
    }
    EXPECT_EQ(n, 30);
    EXPECT_EQ(sum, 345);  // 11.5 * 30
    EXPECT_GE(lo, 2);
    EXPECT_LE(hi, 30);
}

TEST(World, PlannerAgreesWithBreadthFirstSearch) {
    const auto& w = default_world();
    for (const char* name : {"craft_stick", "place_crafting_table_nearby", "craft_bowl", "craft_lever", "harvest_milk",
                             "harvest_wool", "craft_carpet", "harvest_beef", "harvest_mutton"}) {
        const TaskDef* t = w.find_task(name);
        ASSERT_NE(t, nullptr) << name;
        EXPECT_EQ(min_plan_length(w, *t), bfs_plan_length(w, *t)) << name;
    }
}

TEST(World, GoalAlreadyHeldNeedsNoSteps) {
    TaskDef t = *default_world().find_task("craft_stick");
    t.initial_inventory.push_back({"stick", 1});
    EXPECT_EQ(min_plan_length(default_world(), t), 0);
}

TEST(World, UnreachableGoalIsReported) {
    WorldModel w = load_world_text(kTinyWorld);
    w.skills.erase(w.skills.begin());  // nothing makes logs any more
    try {
        min_plan_length(w, *w.find_task("craft_stick"));
        FAIL() << "expected an error";
    } catch (const WorldError& e) {
        EXPECT_EQ(e.kind(), WorldError::Kind::unreachable);
    }
}

TEST(World, ConsumingMoreThanRequiredIsRejected) {
    std::string doc = replace_once(kTinyWorld, R"("consumes": [{"item": "planks", "quantity": 2}])",
                                   R"("consumes": [{"item": "planks", "quantity": 3}])");
    try {
        load_world_text(doc);
        FAIL() << "expected an error";
    } catch (const WorldError& e) {
        EXPECT_EQ(e.kind(), WorldError::Kind::invariant);
        EXPECT_EQ(e.location(), "/skills/2/consumes/0");
    }
}

TEST(World, CycleIsNamed) {
    std::string doc = replace_once(kTinyWorld, R"("preconditions": [{"item": "log", "quantity": 1}],
     "consumes": [{"item": "log", "quantity": 1}])",
                                   R"("preconditions": [{"item": "stick", "quantity": 1}],
     "consumes": [{"item": "stick", "quantity": 1}])");
    try {
        load_world_text(doc);
        FAIL() << "expected an error";
    } catch (const WorldError& e) {
        EXPECT_EQ(e.kind(), WorldError::Kind::cycle);
        std::string msg = e.what();
        EXPECT_NE(msg.find("planks"), std::string::npos) << msg;
        EXPECT_NE(msg.find("stick"), std::string::npos) << msg;
    }
}

TEST(World, DanglingReference) {
    std::string doc = replace_once(kTinyWorld, R"("requirements": [{"item": "planks", "quantity": 2}])",
                                   R"("requirements": [{"item": "plank", "quantity": 2}])");
    try {
        load_world_text(doc);
        FAIL() << "expected an error";
    } catch (const WorldError& e) {
        EXPECT_EQ(e.kind(), WorldError::Kind::dangling_reference);
        EXPECT_EQ(e.location(), "/tasks/1/requirements/0");
    }
}

TEST(World, ParseErrorHasLineAndColumn) {
    std::string doc = replace_once(kTinyWorld, R"("success_prob": 1.0, "step_cost": 1},
    {"description": "craft planks")",
                                   R"("success_prob": 1.0, "step_cost": 1}
    {"description": "craft planks")");
    try {
        load_world_text(doc);
        FAIL() << "expected an error";
    } catch (const WorldError& e) {
        EXPECT_EQ(e.kind(), WorldError::Kind::parse);
        EXPECT_EQ(e.location().rfind("line 6, column", 0), 0u) << e.location();
    }
}

TEST(World, UnknownFieldIsRejected) {
    std::string doc = replace_once(kTinyWorld, R"("step_cost": 1},)", R"("step_cost": 1, "cost": 2},)");
    EXPECT_THROW(load_world_text(doc), WorldError);
}

TEST(World, MissingFileNamesThePath) {
    try {
        load_world("/nonexistent/world.json");
        FAIL();
    } catch (const WorldError& e) {
        EXPECT_EQ(e.kind(), WorldError::Kind::io);
        EXPECT_NE(std::string(e.what()).find("/nonexistent/world.json"), std::string::npos);
    }
}

TEST(World, SubtasksOfCraftBowl) {
    const auto& w = default_world();
    auto subs = subtasks_of(w, *w.find_task("craft_bowl"));
    ASSERT_EQ(subs.size(), 2u);
    EXPECT_EQ(subs[0].name, "craft_planks");
    EXPECT_EQ(subs[0].goal, (Requirement{"planks", 3}));
    EXPECT_EQ(subs[1].name, "place_crafting_table_nearby");
    EXPECT_EQ(subs[1].goal, (Requirement{"crafting_table_nearby", 1}));
    EXPECT_EQ(subs[1].requirements, (std::vector<Requirement>{{"crafting_table", 1}}));
    EXPECT_EQ(subs[0].biome, "forest");
    EXPECT_EQ(subs[0].max_steps, 3000);
}

TEST(World, SubtasksOfWoodenPickaxe) {
    const auto& w = default_world();
    const TaskDef* t = w.find_task("craft_wooden_pickaxe");
    EXPECT_EQ(t->requirements, (std::vector<Requirement>{{"planks", 3}, {"stick", 2}, {"crafting_table_nearby", 1}}));
    auto subs = subtasks_of(w, *t);
    ASSERT_EQ(subs.size(), 3u);
    EXPECT_EQ(subs[0].goal.item, "planks");
    EXPECT_EQ(subs[1].goal.item, "stick");
    EXPECT_EQ(subs[2].goal.item, "crafting_table_nearby");
}

TEST(World, LeafTaskHasNoSubtasks) {
    WorldModel w = load_world_text(kTinyWorld);
    EXPECT_TRUE(subtasks_of(w, *w.find_task("harvest_log")).empty());
}

TEST(World, SubtaskCountMatchesRequirementsEverywhere) {
    const auto& w = default_world();
    for (const auto& t : w.tasks) {
        auto subs = subtasks_of(w, t);
        ASSERT_EQ(subs.size(), t.requirements.size());
        for (std::size_t i = 0; i < subs.size(); ++i) EXPECT_EQ(subs[i].goal, t.requirements[i]);
    }
}

TEST(World, CheapestProducerBreaksTiesByDescription) {
    WorldModel w = load_world_text(kTinyWorld);
    Skill alt = *w.find_skill("craft planks");
    alt.description = "craft a planks";
    w.skills.push_back(alt);
    EXPECT_EQ(w.cheapest_producer("planks")->description, "craft a planks");
}

TEST(World, RoundTrip) {
    const auto& w = default_world();
    WorldModel again = world_from_json(world_to_json(w));
    EXPECT_EQ(again, w);
    EXPECT_EQ(world_to_json(again).dump(), world_to_json(w).dump());
}

TEST(World, DeterministicWorldForcesSuccess) {
    WorldModel d = deterministic_world(default_world());
    for (const auto& s : d.skills) {
        EXPECT_EQ(s.success_in("plains"), 1.0);
        EXPECT_EQ(s.success_in("extreme_hills"), 1.0);
    }
}

namespace {

// Random layered world: item k is crafted from lower-numbered items only.
WorldModel random_world(std::mt19937_64& rng, int n_items) {
    WorldModel w;
    for (int i = 0; i < n_items; ++i) w.items.push_back("x" + std::to_string(i));
    for (int i = 0; i < n_items; ++i) {
        Skill s;
        s.description = "craft x" + std::to_string(i);
        s.kind = SkillKind::craft;
        s.step_cost = 1;
        for (int j = 0; j < i; ++j) {
            if (rng() % 3 != 0) continue;
            std::int64_t need = 1 + static_cast<std::int64_t>(rng() % 2);
            s.preconditions.push_back({w.items[j], need});
            s.consumes.push_back({w.items[j], need});
        }
        s.produces.push_back({w.items[i], 1 + static_cast<std::int64_t>(rng() % 2)});
        w.skills.push_back(std::move(s));
    }
    return w;
}

}  // namespace

TEST(World, MorePossessionsNeverLengthenThePlan) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        WorldModel w = random_world(rng, 6);
        TaskDef t;
        t.name = "goal";
        t.goal = {"x5", 1};
        t.requirements = w.skills.back().preconditions;
        t.max_steps = 1000;
        t.biome = "plains";
        std::int64_t base = min_plan_length(w, t);
        EXPECT_EQ(base, bfs_plan_length(w, t, 40)) << "trial " << trial;
        TaskDef richer = t;
        richer.initial_inventory.push_back({w.items[rng() % 5], 1 + static_cast<std::int64_t>(rng() % 3)});
        EXPECT_LE(min_plan_length(w, richer), base) << "trial " << trial;
    }
}

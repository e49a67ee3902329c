#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "craftagent/quantity.hpp"
#include "craftagent/world.hpp"

namespace craftagent {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

// mt19937_64 is fully specified by the standard; the double conversion is done by hand
// because std::uniform_real_distribution differs between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : eng_() % n; }
    bool operator==(const Rng&) const = default;

private:
    std::mt19937_64 eng_;
};

// Multiset that remembers first-acquisition order.
class Container {
public:
    Quantity get(const std::string& item) const {
        for (const auto& [k, v] : entries_)
            if (k == item) return v;
        return Quantity(0);
    }
    void add(const std::string& item, const Quantity& q) {
        for (auto& [k, v] : entries_)
            if (k == item) {
                v += q;
                return;
            }
        entries_.emplace_back(item, q);
    }
    void remove(const std::string& item, const Quantity& q) {
        for (auto& [k, v] : entries_)
            if (k == item) {
                if (v < q) throw std::logic_error("removing more " + item + " than held");
                v -= q;
                return;
            }
        throw std::logic_error("removing absent item " + item);
    }
    // "2.0 log; 3.0 dirt", or "nothing"
    std::string render() const {
        std::string out;
        for (const auto& [k, v] : entries_) {
            if (!v.positive()) continue;
            if (!out.empty()) out += "; ";
            out += v.one_decimal() + " " + k;
        }
        return out.empty() ? "nothing" : out;
    }
    const std::vector<std::pair<std::string, Quantity>>& entries() const { return entries_; }
    bool operator==(const Container&) const = default;

private:
    std::vector<std::pair<std::string, Quantity>> entries_;
};

enum class Done { running, success, failure };

inline std::string_view to_string(Done d) {
    switch (d) {
        case Done::running: return "running";
        case Done::success: return "success";
        case Done::failure: return "failure";
    }
    return "?";
}

struct EpisodeState {
    TaskDef task;
    Container inventory;
    Container surroundings;
    std::int64_t steps_used = 0;
    Rng rng;
    Done done = Done::running;

    const Container& holder_for(const std::string& item) const { return is_nearby(item) ? surroundings : inventory; }
    Container& holder_for(const std::string& item) { return is_nearby(item) ? surroundings : inventory; }
    Quantity amount(const std::string& item) const { return holder_for(item).get(item); }
    bool operator==(const EpisodeState&) const = default;
};

inline EpisodeState start_episode(const TaskDef& task, std::uint64_t seed) {
    EpisodeState s;
    s.task = task;
    s.rng = Rng(seed);
    for (const auto& r : task.initial_inventory) s.holder_for(r.item).add(r.item, r.quantity);
    if (s.amount(task.goal.item) >= task.goal.quantity) s.done = Done::success;
    return s;
}

struct Deficit {
    Requirement requirement;
    Quantity have;
    Quantity missing;
    bool operator==(const Deficit&) const = default;
};

struct Feedback {
    std::vector<Deficit> deficits;
    std::string attempted_skill;
    bool operator==(const Feedback&) const = default;
};

inline std::pair<std::string, std::string> observe(const EpisodeState& s) {
    return {s.inventory.render(), s.surroundings.render()};
}

// nullopt means every precondition holds.
inline std::optional<Feedback> check(const EpisodeState& s, const Skill& skill) {
    Feedback fb;
    fb.attempted_skill = skill.description;
    for (const auto& r : skill.preconditions) {
        Quantity have = s.amount(r.item);
        if (have < r.quantity) fb.deficits.push_back({r, have, r.quantity - have});
    }
    if (fb.deficits.empty()) return std::nullopt;
    return fb;
}

enum class Outcome { applied, stochastic_failure, budget_exhausted };

inline std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::applied: return "applied";
        case Outcome::stochastic_failure: return "stochastic_failure";
        case Outcome::budget_exhausted: return "budget_exhausted";
    }
    return "?";
}

struct PreconditionViolated : std::logic_error {
    using std::logic_error::logic_error;
};

inline bool goal_met(const EpisodeState& s, const Requirement& goal) { return s.amount(goal.item) >= goal.quantity; }

inline Outcome execute(EpisodeState& s, const Skill& skill) {
    if (s.done != Done::running) throw std::logic_error("execute on a finished episode");
    if (check(s, skill)) throw PreconditionViolated("preconditions of '" + skill.description + "' not met");
    s.steps_used += skill.step_cost;
    if (s.steps_used > s.task.max_steps) {
        s.done = Done::failure;
        return Outcome::budget_exhausted;
    }
    double u = s.rng.uniform();
    if (!(u < skill.success_in(s.task.biome))) return Outcome::stochastic_failure;
    for (const auto& c : skill.consumes) s.holder_for(c.item).remove(c.item, c.quantity);
    for (const auto& p : skill.produces) s.holder_for(p.item).add(p.item, p.quantity);
    if (goal_met(s, s.task.goal)) s.done = Done::success;
    return Outcome::applied;
}

enum class Progress { incomplete, complete };

inline Progress subtask_progress(const EpisodeState& s, const TaskDef& subtask) {
    return goal_met(s, subtask.goal) ? Progress::complete : Progress::incomplete;
}

}  // namespace craftagent

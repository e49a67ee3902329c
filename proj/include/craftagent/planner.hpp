#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>
#include <string>
#include <unordered_map>
#include <vector>

#include "craftagent/world.hpp"

namespace craftagent {

namespace detail {

struct VecHash {
    std::size_t operator()(const std::vector<std::int64_t>& v) const {
        std::uint64_t h = 1469598103934665603ULL;
        for (auto x : v) {
            h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

struct PlanProblem {
    std::vector<std::string> items;  // consumers before inputs
    std::map<std::string, int> index;
    struct Act {
        std::vector<std::pair<int, std::int64_t>> pre, cons, prod;
    };
    std::vector<Act> acts;
    std::vector<int> unique_producer;     // per item, act index or -1
    std::vector<std::int64_t> yield;      // per item, from its unique producer
    int goal = 0;
    std::int64_t goal_q = 0;
    std::int64_t scale = 1;
};

inline PlanProblem build_problem(const WorldModel& w, const TaskDef& t) {
    PlanProblem P;
    auto closure = requirement_closure(w, t);
    std::set<std::string> in(closure.begin(), closure.end());

    // topological order on item -> precondition edges (consumer first)
    std::map<std::string, std::set<std::string>> g;
    for (const auto& item : closure)
        for (const Skill* s : w.producers_of(item))
            for (const auto& r : s->preconditions) g[item].insert(r.item);
    std::set<std::string> done;
    std::vector<std::string> post;
    auto dfs = [&](auto&& self, const std::string& u) -> void {
        if (!done.insert(u).second) return;
        for (const auto& v : g[u]) self(self, v);
        post.push_back(u);
    };
    for (const auto& item : closure) dfs(dfs, item);
    P.items.assign(post.rbegin(), post.rend());
    for (std::size_t i = 0; i < P.items.size(); ++i) P.index[P.items[i]] = static_cast<int>(i);

    std::int64_t L = t.goal.quantity.den();
    auto fold = [&](const Quantity& q) { L = std::lcm(L, q.den()); };
    std::vector<const Skill*> relevant;
    for (const auto& s : w.skills) {
        bool useful = std::any_of(s.produces.begin(), s.produces.end(),
                                  [&](const Requirement& r) { return in.count(r.item) > 0; });
        if (!useful) continue;
        relevant.push_back(&s);
        for (const auto* v : {&s.preconditions, &s.consumes, &s.produces})
            for (const auto& r : *v) fold(r.quantity);
    }
    for (const auto& r : t.initial_inventory) fold(r.quantity);
    P.scale = L;
    auto scaled = [&](const Quantity& q) { return q.num() * (L / q.den()); };

    P.unique_producer.assign(P.items.size(), -1);
    P.yield.assign(P.items.size(), 0);
    std::vector<int> producer_count(P.items.size(), 0);
    for (const Skill* s : relevant) {
        PlanProblem::Act a;
        for (const auto& r : s->preconditions) a.pre.emplace_back(P.index.at(r.item), scaled(r.quantity));
        for (const auto& r : s->consumes) a.cons.emplace_back(P.index.at(r.item), scaled(r.quantity));
        for (const auto& r : s->produces)
            if (in.count(r.item)) a.prod.emplace_back(P.index.at(r.item), scaled(r.quantity));
        int id = static_cast<int>(P.acts.size());
        for (auto [i, q] : a.prod) {
            producer_count[i]++;
            P.unique_producer[i] = id;
            P.yield[i] = q;
        }
        P.acts.push_back(std::move(a));
    }
    for (std::size_t i = 0; i < P.items.size(); ++i)
        if (producer_count[i] != 1) P.unique_producer[i] = -1;
    P.goal = P.index.at(t.goal.item);
    P.goal_q = scaled(t.goal.quantity);
    return P;
}

// Lower bound on remaining executions: propagate demand from the goal through unique
// producers, counting each producer at least ceil(shortfall / yield) times.
inline std::int64_t plan_lower_bound(const PlanProblem& P, const std::vector<std::int64_t>& s) {
    std::size_t n = P.items.size();
    std::vector<std::int64_t> lb(P.acts.size(), 0), cons(n, 0), pres(n, 0);
    pres[P.goal] = P.goal_q;
    std::int64_t h = 0;
    for (std::size_t i = 0; i < n; ++i) {
        int a = P.unique_producer[i];
        std::int64_t need = std::max(cons[i], pres[i]) - s[i];
        if (need <= 0 || a < 0) continue;
        std::int64_t e = (need + P.yield[i] - 1) / P.yield[i];
        if (e <= lb[a]) continue;
        std::int64_t delta = e - lb[a];
        lb[a] = e;
        h += delta;
        for (auto [j, q] : P.acts[a].pre) pres[j] = std::max(pres[j], q);
        for (auto [j, q] : P.acts[a].cons) cons[j] += delta * q;
    }
    return h;
}

}  // namespace detail

// Minimum number of skill executions reaching the goal with every skill succeeding.
inline std::int64_t min_plan_length(const WorldModel& w, const TaskDef& t, std::size_t max_expansions = 4'000'000) {
    auto P = detail::build_problem(w, t);
    std::size_t n = P.items.size();
    std::vector<std::int64_t> start(n, 0);
    for (const auto& r : t.initial_inventory) {
        auto it = P.index.find(r.item);
        if (it != P.index.end()) start[it->second] += r.quantity.num() * (P.scale / r.quantity.den());
    }
    if (start[P.goal] >= P.goal_q) return 0;

    // delete-relaxed reachability
    std::vector<bool> have(n);
    for (std::size_t i = 0; i < n; ++i) have[i] = start[i] > 0;
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& a : P.acts) {
            if (!std::all_of(a.pre.begin(), a.pre.end(), [&](auto& p) { return have[p.first]; })) continue;
            for (auto [j, q] : a.prod)
                if (!have[j]) have[j] = changed = true;
        }
    }
    if (!have[P.goal])
        throw WorldError(WorldError::Kind::unreachable, "/tasks/" + t.name, "goal '" + t.goal.item + "' is unreachable");

    using State = std::vector<std::int64_t>;
    std::unordered_map<State, std::int64_t, detail::VecHash> best;
    std::vector<State> nodes;
    using Entry = std::tuple<std::int64_t, std::int64_t, std::size_t>;  // f, -g, node
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    best[start] = 0;
    nodes.push_back(start);
    open.emplace(detail::plan_lower_bound(P, start), 0, 0);
    std::size_t expansions = 0;
    while (!open.empty()) {
        auto [f, ng, id] = open.top();
        open.pop();
        State cur = nodes[id];
        std::int64_t g = -ng;
        if (best[cur] < g) continue;
        if (cur[P.goal] >= P.goal_q) return g;
        if (++expansions > max_expansions)
            throw WorldError(WorldError::Kind::unreachable, "/tasks/" + t.name, "plan search exceeded its expansion limit");
        for (const auto& a : P.acts) {
            bool ok = std::all_of(a.pre.begin(), a.pre.end(), [&](auto& p) { return cur[p.first] >= p.second; });
            if (!ok) continue;
            State nx = cur;
            for (auto [j, q] : a.cons) nx[j] -= q;
            for (auto [j, q] : a.prod) nx[j] += q;
            auto it = best.find(nx);
            if (it != best.end() && it->second <= g + 1) continue;
            best[nx] = g + 1;
            std::int64_t h = detail::plan_lower_bound(P, nx);
            nodes.push_back(std::move(nx));
            open.emplace(g + 1 + h, -(g + 1), nodes.size() - 1);
        }
    }
    throw WorldError(WorldError::Kind::unreachable, "/tasks/" + t.name, "no plan reaches '" + t.goal.item + "'");
}

}  // namespace craftagent

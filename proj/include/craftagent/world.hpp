#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "craftagent/quantity.hpp"

namespace craftagent {

using Json = nlohmann::ordered_json;

inline constexpr std::array<std::string_view, 6> kAllowedVerbs = {"harvest", "craft", "find",
                                                                  "get",     "place", "mine"};

inline bool is_allowed_verb(std::string_view w) {
    return std::find(kAllowedVerbs.begin(), kAllowedVerbs.end(), w) != kAllowedVerbs.end();
}

inline bool is_nearby(std::string_view item) {
    constexpr std::string_view suffix = "_nearby";
    return item.size() > suffix.size() && item.substr(item.size() - suffix.size()) == suffix;
}

struct Requirement {
    std::string item;
    Quantity quantity;
    bool operator==(const Requirement&) const = default;
};

enum class SkillKind { find, manipulate, craft, place };

inline std::string_view to_string(SkillKind k) {
    switch (k) {
        case SkillKind::find: return "find";
        case SkillKind::manipulate: return "manipulate";
        case SkillKind::craft: return "craft";
        case SkillKind::place: return "place";
    }
    return "?";
}

struct Skill {
    std::string description;
    SkillKind kind = SkillKind::craft;
    std::vector<Requirement> preconditions;
    std::vector<Requirement> consumes;
    std::vector<Requirement> produces;
    double success_prob = 1.0;
    std::int64_t step_cost = 1;
    // Per-biome override of success_prob; a biome missing from a non-empty map means 0.
    std::map<std::string, double> biome_success;

    double success_in(const std::string& biome) const {
        if (biome_success.empty()) return success_prob;
        auto it = biome_success.find(biome);
        return it == biome_success.end() ? 0.0 : it->second;
    }
    const std::string& primary_product() const { return produces.front().item; }
    bool operator==(const Skill&) const = default;
};

struct TaskDef {
    std::string name;
    std::string family;
    Requirement goal;
    std::vector<Requirement> requirements;
    std::string biome;
    std::int64_t max_steps = 0;
    std::vector<Requirement> initial_inventory;
    bool operator==(const TaskDef&) const = default;
};

struct WorldModel {
    std::vector<std::string> items;
    std::vector<Skill> skills;
    std::vector<TaskDef> tasks;
    std::map<std::string, std::string> synonyms;

    bool operator==(const WorldModel&) const = default;

    const Skill* find_skill(std::string_view description) const {
        for (const auto& s : skills)
            if (s.description == description) return &s;
        return nullptr;
    }
    const TaskDef* find_task(std::string_view name) const {
        for (const auto& t : tasks)
            if (t.name == name) return &t;
        return nullptr;
    }
    bool has_item(std::string_view name) const {
        return std::find(items.begin(), items.end(), name) != items.end();
    }
    std::vector<const Skill*> producers_of(std::string_view item) const {
        std::vector<const Skill*> out;
        for (const auto& s : skills)
            for (const auto& p : s.produces)
                if (p.item == item) {
                    out.push_back(&s);
                    break;
                }
        return out;
    }
    // Fewest preconditions, then lexicographic description.
    const Skill* cheapest_producer(std::string_view item) const {
        const Skill* best = nullptr;
        for (const Skill* s : producers_of(item)) {
            if (!best || s->preconditions.size() < best->preconditions.size() ||
                (s->preconditions.size() == best->preconditions.size() &&
                 s->description < best->description))
                best = s;
        }
        return best;
    }
};

class WorldError : public std::runtime_error {
public:
    enum class Kind { parse, field, dangling_reference, cycle, invariant, unreachable, io };
    WorldError(Kind k, std::string location, const std::string& msg)
        : std::runtime_error(location.empty() ? msg : location + ": " + msg),
          kind_(k),
          location_(std::move(location)),
          message_(msg) {}
    Kind kind() const { return kind_; }
    const std::string& location() const { return location_; }
    const std::string& message() const { return message_; }

private:
    Kind kind_;
    std::string location_;
    std::string message_;
};

inline std::string snake_case(std::string_view text) {
    std::string out;
    for (char c : text) out.push_back(c == ' ' ? '_' : c);
    return out;
}

namespace detail {

inline std::string at(const std::string& base, const std::string& key) { return base + "/" + key; }
inline std::string at(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

inline void check_keys(const Json& obj, const std::string& where,
                       std::initializer_list<std::string_view> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const std::string& k = it.key();
        if (!k.empty() && k[0] == '_') continue;
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw WorldError(WorldError::Kind::field, at(where, k), "unknown field");
    }
}

inline const Json& need(const Json& obj, const std::string& where, const char* key) {
    if (!obj.is_object()) throw WorldError(WorldError::Kind::field, where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw WorldError(WorldError::Kind::field, at(where, key), "missing field");
    return *it;
}

inline std::string need_string(const Json& obj, const std::string& where, const char* key) {
    const Json& v = need(obj, where, key);
    if (!v.is_string()) throw WorldError(WorldError::Kind::field, at(where, key), "expected a string");
    return v.get<std::string>();
}

inline Quantity quantity_from(const Json& v, const std::string& where) {
    try {
        if (v.is_number_integer()) return Quantity(v.get<std::int64_t>());
        if (v.is_number_float()) return Quantity::parse(v.dump());
        if (v.is_string()) return Quantity::parse(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw WorldError(WorldError::Kind::field, where, e.what());
    }
    throw WorldError(WorldError::Kind::field, where, "expected a quantity");
}

inline Json quantity_to(const Quantity& q) {
    if (q.is_integer()) return Json(q.num());
    return Json(q.exact());
}

inline std::vector<Requirement> requirements_from(const Json& obj, const std::string& where,
                                                  const char* key, bool optional = false) {
    std::vector<Requirement> out;
    auto it = obj.find(key);
    if (it == obj.end()) {
        if (optional) return out;
        throw WorldError(WorldError::Kind::field, at(where, key), "missing field");
    }
    std::string base = at(where, key);
    if (!it->is_array()) throw WorldError(WorldError::Kind::field, base, "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
        const Json& r = (*it)[i];
        std::string w = at(base, i);
        check_keys(r, w, {"item", "quantity"});
        Requirement req{need_string(r, w, "item"), quantity_from(need(r, w, "quantity"), at(w, "quantity"))};
        out.push_back(std::move(req));
    }
    return out;
}

inline Json requirements_to(const std::vector<Requirement>& reqs) {
    Json arr = Json::array();
    for (const auto& r : reqs) arr.push_back(Json{{"item", r.item}, {"quantity", quantity_to(r.quantity)}});
    return arr;
}

inline std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace detail

inline SkillKind skill_kind_from(std::string_view s, const std::string& where) {
    if (s == "find") return SkillKind::find;
    if (s == "manipulate") return SkillKind::manipulate;
    if (s == "craft") return SkillKind::craft;
    if (s == "place") return SkillKind::place;
    throw WorldError(WorldError::Kind::field, where, "unknown skill kind '" + std::string(s) + "'");
}

// Item-level requirement edges: produced item -> precondition items of its producers.
inline std::map<std::string, std::set<std::string>> requirement_graph(const WorldModel& w) {
    std::map<std::string, std::set<std::string>> g;
    for (const auto& s : w.skills)
        for (const auto& p : s.produces)
            for (const auto& r : s.preconditions) g[p.item].insert(r.item);
    return g;
}

inline std::optional<std::vector<std::string>> find_cycle(const WorldModel& w) {
    auto g = requirement_graph(w);
    std::map<std::string, int> color;  // 0 new, 1 on stack, 2 done
    std::vector<std::string> path;
    std::optional<std::vector<std::string>> found;
    auto dfs = [&](auto&& self, const std::string& u) -> void {
        color[u] = 1;
        path.push_back(u);
        for (const auto& v : g[u]) {
            if (found) return;
            if (color[v] == 1) {
                auto it = std::find(path.begin(), path.end(), v);
                std::vector<std::string> cyc(it, path.end());
                cyc.push_back(v);
                found = cyc;
                return;
            }
            if (color[v] == 0) self(self, v);
        }
        path.pop_back();
        color[u] = 2;
    };
    for (const auto& [u, _] : g) {
        if (found) break;
        if (color[u] == 0) dfs(dfs, u);
    }
    return found;
}

// Items a task may need: its requirements and, recursively, the preconditions of their producers.
inline std::vector<std::string> requirement_closure(const WorldModel& w, const TaskDef& t) {
    std::vector<std::string> order;
    std::set<std::string> seen;
    std::vector<std::string> stack;
    auto visit = [&](const std::string& item) {
        if (seen.insert(item).second) {
            order.push_back(item);
            stack.push_back(item);
        }
    };
    visit(t.goal.item);
    for (const auto& r : t.requirements) visit(r.item);
    while (!stack.empty()) {
        std::string item = stack.back();
        stack.pop_back();
        for (const Skill* s : w.producers_of(item))
            for (const auto& r : s->preconditions) visit(r.item);
    }
    return order;
}

inline void validate_world(const WorldModel& w) {
    using K = WorldError::Kind;
    std::set<std::string> names;
    for (std::size_t i = 0; i < w.items.size(); ++i) {
        const auto& n = w.items[i];
        std::string where = detail::at("/items", i);
        if (n.empty()) throw WorldError(K::invariant, where, "empty item name");
        for (char c : n)
            if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'))
                throw WorldError(K::invariant, where, "item name '" + n + "' is not snake_case");
        if (!names.insert(n).second) throw WorldError(K::invariant, where, "duplicate item '" + n + "'");
    }
    auto check_refs = [&](const std::vector<Requirement>& reqs, const std::string& where) {
        for (std::size_t i = 0; i < reqs.size(); ++i) {
            std::string loc = detail::at(where, i);
            if (!names.count(reqs[i].item))
                throw WorldError(K::dangling_reference, loc, "unknown item '" + reqs[i].item + "'");
            if (!reqs[i].quantity.positive())
                throw WorldError(K::invariant, loc, "quantity must be positive");
        }
    };
    std::set<std::string> descriptions;
    for (std::size_t i = 0; i < w.skills.size(); ++i) {
        const Skill& s = w.skills[i];
        std::string where = detail::at("/skills", i);
        if (!descriptions.insert(s.description).second)
            throw WorldError(K::invariant, where, "duplicate skill '" + s.description + "'");
        std::string first = s.description.substr(0, s.description.find(' '));
        if (!is_allowed_verb(first))
            throw WorldError(K::invariant, where + "/description",
                             "'" + s.description + "' does not start with an allowed verb");
        check_refs(s.preconditions, where + "/preconditions");
        check_refs(s.consumes, where + "/consumes");
        check_refs(s.produces, where + "/produces");
        if (s.produces.empty()) throw WorldError(K::invariant, where + "/produces", "skill produces nothing");
        for (std::size_t j = 0; j < s.consumes.size(); ++j) {
            const auto& c = s.consumes[j];
            auto it = std::find_if(s.preconditions.begin(), s.preconditions.end(),
                                   [&](const Requirement& r) { return r.item == c.item; });
            if (it == s.preconditions.end() || it->quantity < c.quantity)
                throw WorldError(K::invariant, detail::at(where + "/consumes", j),
                                 "'" + s.description + "' consumes " + c.quantity.compact() + " " + c.item +
                                     " but its preconditions do not require that much");
        }
        if (s.success_prob < 0.0 || s.success_prob > 1.0)
            throw WorldError(K::invariant, where + "/success_prob", "probability outside [0,1]");
        for (const auto& [b, p] : s.biome_success)
            if (p < 0.0 || p > 1.0)
                throw WorldError(K::invariant, where + "/biome_success/" + b, "probability outside [0,1]");
        if (s.kind == SkillKind::craft && s.success_prob != 1.0)
            throw WorldError(K::invariant, where + "/success_prob", "craft skills always succeed");
        if (s.step_cost <= 0) throw WorldError(K::invariant, where + "/step_cost", "step cost must be positive");
    }
    if (auto cyc = find_cycle(w)) {
        std::string text;
        for (std::size_t i = 0; i < cyc->size(); ++i) text += (i ? " -> " : "") + (*cyc)[i];
        throw WorldError(K::cycle, "/skills", "cyclic requirement graph: " + text);
    }
    std::set<std::string> task_names;
    for (std::size_t i = 0; i < w.tasks.size(); ++i) {
        const TaskDef& t = w.tasks[i];
        std::string where = detail::at("/tasks", i);
        if (t.name.empty()) throw WorldError(K::invariant, where + "/name", "empty task name");
        if (!task_names.insert(t.name).second)
            throw WorldError(K::invariant, where, "duplicate task '" + t.name + "'");
        check_refs({t.goal}, where + "/goal");
        check_refs(t.requirements, where + "/requirements");
        check_refs(t.initial_inventory, where + "/initial_inventory");
        if (t.max_steps <= 0) throw WorldError(K::invariant, where + "/max_steps", "must be positive");
        if (w.producers_of(t.goal.item).empty())
            throw WorldError(K::invariant, where + "/goal", "no skill produces '" + t.goal.item + "'");
        for (const auto& item : requirement_closure(w, t)) {
            bool initial = std::any_of(t.initial_inventory.begin(), t.initial_inventory.end(),
                                       [&](const Requirement& r) { return r.item == item; });
            if (!initial && w.producers_of(item).empty())
                throw WorldError(K::unreachable, where,
                                 "'" + item + "' is needed but neither produced nor initially held");
        }
    }
    for (const auto& [alias, canon] : w.synonyms)
        if (alias.empty() || canon.empty())
            throw WorldError(K::invariant, "/synonyms", "empty synonym entry");
}

inline WorldModel world_from_json(const Json& doc) {
    using K = WorldError::Kind;
    if (!doc.is_object()) throw WorldError(K::field, "", "world document must be an object");
    detail::check_keys(doc, "", {"items", "skills", "tasks", "synonyms"});
    WorldModel w;

    const Json& items = detail::need(doc, "", "items");
    if (!items.is_array()) throw WorldError(K::field, "/items", "expected an array");
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!items[i].is_string()) throw WorldError(K::field, detail::at("/items", i), "expected a string");
        w.items.push_back(items[i].get<std::string>());
    }

    const Json& skills = detail::need(doc, "", "skills");
    if (!skills.is_array()) throw WorldError(K::field, "/skills", "expected an array");
    for (std::size_t i = 0; i < skills.size(); ++i) {
        const Json& s = skills[i];
        std::string where = detail::at("/skills", i);
        detail::check_keys(s, where,
                           {"description", "kind", "preconditions", "consumes", "produces", "success_prob",
                            "step_cost", "biome_success"});
        Skill sk;
        sk.description = detail::need_string(s, where, "description");
        sk.kind = skill_kind_from(detail::need_string(s, where, "kind"), where + "/kind");
        sk.preconditions = detail::requirements_from(s, where, "preconditions", true);
        sk.consumes = detail::requirements_from(s, where, "consumes", true);
        sk.produces = detail::requirements_from(s, where, "produces");
        const Json& p = detail::need(s, where, "success_prob");
        if (!p.is_number()) throw WorldError(K::field, where + "/success_prob", "expected a number");
        sk.success_prob = p.get<double>();
        const Json& c = detail::need(s, where, "step_cost");
        if (!c.is_number_integer()) throw WorldError(K::field, where + "/step_cost", "expected an integer");
        sk.step_cost = c.get<std::int64_t>();
        if (auto it = s.find("biome_success"); it != s.end()) {
            if (!it->is_object()) throw WorldError(K::field, where + "/biome_success", "expected an object");
            for (auto b = it->begin(); b != it->end(); ++b) {
                if (!b.value().is_number())
                    throw WorldError(K::field, where + "/biome_success/" + b.key(), "expected a number");
                sk.biome_success[b.key()] = b.value().get<double>();
            }
        }
        w.skills.push_back(std::move(sk));
    }

    const Json& tasks = detail::need(doc, "", "tasks");
    if (!tasks.is_array()) throw WorldError(K::field, "/tasks", "expected an array");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Json& t = tasks[i];
        std::string where = detail::at("/tasks", i);
        detail::check_keys(t, where,
                           {"name", "family", "goal", "requirements", "biome", "max_steps", "initial_inventory"});
        TaskDef td;
        td.name = detail::need_string(t, where, "name");
        if (t.contains("family")) td.family = detail::need_string(t, where, "family");
        const Json& g = detail::need(t, where, "goal");
        detail::check_keys(g, where + "/goal", {"item", "quantity"});
        td.goal = {detail::need_string(g, where + "/goal", "item"),
                   detail::quantity_from(detail::need(g, where + "/goal", "quantity"), where + "/goal/quantity")};
        td.requirements = detail::requirements_from(t, where, "requirements", true);
        td.biome = detail::need_string(t, where, "biome");
        const Json& m = detail::need(t, where, "max_steps");
        if (!m.is_number_integer()) throw WorldError(K::field, where + "/max_steps", "expected an integer");
        td.max_steps = m.get<std::int64_t>();
        td.initial_inventory = detail::requirements_from(t, where, "initial_inventory", true);
        w.tasks.push_back(std::move(td));
    }

    if (auto it = doc.find("synonyms"); it != doc.end()) {
        if (!it->is_object()) throw WorldError(K::field, "/synonyms", "expected an object");
        for (auto s = it->begin(); s != it->end(); ++s) {
            if (!s.value().is_string())
                throw WorldError(K::field, "/synonyms/" + s.key(), "expected a string");
            w.synonyms[s.key()] = s.value().get<std::string>();
        }
    }
    validate_world(w);
    return w;
}

inline WorldModel load_world_text(std::string_view text) {
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        auto [line, col] = detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        throw WorldError(WorldError::Kind::parse, "line " + std::to_string(line) + ", column " + std::to_string(col),
                         "JSON parse error");
    }
    return world_from_json(doc);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw WorldError(WorldError::Kind::io, path, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline WorldModel load_world(const std::string& path) {
    std::string text = read_text_file(path);
    try {
        return load_world_text(text);
    } catch (const WorldError& e) {
        throw WorldError(e.kind(), path + (e.location().empty() ? "" : ":" + e.location()), e.message());
    }
}

inline Json world_to_json(const WorldModel& w) {
    Json doc;
    doc["items"] = w.items;
    Json skills = Json::array();
    for (const auto& s : w.skills) {
        Json j;
        j["description"] = s.description;
        j["kind"] = std::string(to_string(s.kind));
        j["preconditions"] = detail::requirements_to(s.preconditions);
        j["consumes"] = detail::requirements_to(s.consumes);
        j["produces"] = detail::requirements_to(s.produces);
        j["success_prob"] = s.success_prob;
        j["step_cost"] = s.step_cost;
        if (!s.biome_success.empty()) {
            Json b = Json::object();
            for (const auto& [k, v] : s.biome_success) b[k] = v;
            j["biome_success"] = b;
        }
        skills.push_back(std::move(j));
    }
    doc["skills"] = skills;
    Json tasks = Json::array();
    for (const auto& t : w.tasks) {
        Json j;
        j["name"] = t.name;
        j["family"] = t.family;
        j["goal"] = Json{{"item", t.goal.item}, {"quantity", detail::quantity_to(t.goal.quantity)}};
        j["requirements"] = detail::requirements_to(t.requirements);
        j["biome"] = t.biome;
        j["max_steps"] = t.max_steps;
        j["initial_inventory"] = detail::requirements_to(t.initial_inventory);
        tasks.push_back(std::move(j));
    }
    doc["tasks"] = tasks;
    Json syn = Json::object();
    for (const auto& [k, v] : w.synonyms) syn[k] = v;
    doc["synonyms"] = syn;
    return doc;
}

// Every stochastic skill forced to succeed, including find skills in every biome.
inline WorldModel deterministic_world(WorldModel w) {
    for (auto& s : w.skills) {
        s.success_prob = 1.0;
        s.biome_success.clear();
    }
    return w;
}

// Label as it appears in prompts: craft_wooden_pickaxe -> "craft wooden pickaxe".
inline std::string task_text(std::string_view name) {
    std::string out(name);
    for (auto& c : out)
        if (c == '_') c = ' ';
    return out;
}

inline TaskDef derive_subtask(const WorldModel& w, const TaskDef& parent, const Requirement& req) {
    TaskDef sub;
    const Skill* p = w.cheapest_producer(req.item);
    sub.name = p ? snake_case(p->description) : "obtain_" + req.item;
    sub.family = parent.family;
    sub.goal = req;
    if (p) sub.requirements = p->preconditions;
    sub.biome = parent.biome;
    sub.max_steps = parent.max_steps;
    sub.initial_inventory = parent.initial_inventory;
    return sub;
}

inline std::vector<TaskDef> subtasks_of(const WorldModel& w, const TaskDef& task) {
    std::vector<TaskDef> out;
    out.reserve(task.requirements.size());
    for (const auto& r : task.requirements) out.push_back(derive_subtask(w, task, r));
    return out;
}

}  // namespace craftagent

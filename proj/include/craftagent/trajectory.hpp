#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "craftagent/simulator.hpp"
#include "craftagent/world.hpp"

namespace craftagent {

struct Attempt {
    std::string raw;
    std::string draft;                      // extracted skill text; empty when malformed
    std::optional<std::string> retrieved;   // none when the output could not be parsed
    std::optional<Feedback> feedback;       // none means the check passed (or malformed)
    bool malformed = false;
    bool ok() const { return !malformed && !feedback; }
    bool operator==(const Attempt&) const = default;
};

struct LabelEvent {
    enum class Op { push, pop };
    Op op = Op::push;
    std::string label;
    bool operator==(const LabelEvent&) const = default;
};

struct TrajectoryStep {
    int step_index = 0;
    std::string inventory_text;
    std::string surroundings_text;
    std::string prompt_label;   // label rendered into the decision prompt
    std::string active_label;   // top of the label stack while the skill executed
    std::vector<std::string> history;
    std::vector<Attempt> attempts;
    std::optional<std::string> executed_skill;
    std::string outcome;  // applied | stochastic_failure | budget_exhausted | step_failure | policy_unavailable
    std::vector<LabelEvent> label_events;
    std::string inventory_after;
    std::string surroundings_after;
    std::int64_t steps_used_after = 0;
    bool operator==(const TrajectoryStep&) const = default;
};

struct LabelInfo {
    std::string requirements_text;
    Requirement goal;
    bool operator==(const LabelInfo&) const = default;
};

struct Trajectory {
    std::string id;
    std::string task;
    std::string family;
    std::string biome;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string status;  // success | failure | policy_unavailable
    std::string policy;
    int max_revisions = 5;
    bool cot = false;
    bool deterministic_world = false;
    std::string world_path;
    std::map<std::string, LabelInfo> labels;
    std::vector<TrajectoryStep> steps;
    bool operator==(const Trajectory&) const = default;
};

struct TrajectoryParseError : std::runtime_error {
    TrajectoryParseError(const std::string& file, const std::string& msg)
        : std::runtime_error("trajectory " + file + ": " + msg), file(file) {}
    std::string file;
};

namespace detail {

inline Json requirement_to_json(const Requirement& r) {
    return Json{{"item", r.item}, {"quantity", r.quantity.exact()}};
}
inline Requirement requirement_from_json(const Json& j) {
    return {j.at("item").get<std::string>(), Quantity::parse(j.at("quantity").get<std::string>())};
}

inline Json feedback_to_json(const Feedback& f) {
    Json d = Json::array();
    for (const auto& x : f.deficits)
        d.push_back(Json{{"item", x.requirement.item},
                         {"need", x.requirement.quantity.exact()},
                         {"have", x.have.exact()},
                         {"missing", x.missing.exact()}});
    return Json{{"skill", f.attempted_skill}, {"deficits", d}};
}

inline Feedback feedback_from_json(const Json& j) {
    Feedback f;
    f.attempted_skill = j.at("skill").get<std::string>();
    for (const auto& x : j.at("deficits"))
        f.deficits.push_back({{x.at("item").get<std::string>(), Quantity::parse(x.at("need").get<std::string>())},
                              Quantity::parse(x.at("have").get<std::string>()),
                              Quantity::parse(x.at("missing").get<std::string>())});
    return f;
}

}  // namespace detail

inline Json trajectory_to_json(const Trajectory& t) {
    Json j;
    j["id"] = t.id;
    j["task"] = t.task;
    j["family"] = t.family;
    j["biome"] = t.biome;
    j["seed"] = std::to_string(t.seed);
    j["config_hash"] = t.config_hash;
    j["status"] = t.status;
    j["policy"] = t.policy;
    j["max_revisions"] = t.max_revisions;
    j["cot"] = t.cot;
    j["deterministic_world"] = t.deterministic_world;
    j["world_path"] = t.world_path;
    Json labels = Json::object();
    for (const auto& [name, info] : t.labels)
        labels[name] = Json{{"goal", detail::requirement_to_json(info.goal)}, {"requirements", info.requirements_text}};
    j["labels"] = labels;
    Json steps = Json::array();
    for (const auto& s : t.steps) {
        Json js;
        js["step"] = s.step_index;
        js["inventory"] = s.inventory_text;
        js["surroundings"] = s.surroundings_text;
        js["prompt_label"] = s.prompt_label;
        js["active_label"] = s.active_label;
        js["history"] = s.history;
        Json atts = Json::array();
        for (const auto& a : s.attempts) {
            Json ja;
            ja["raw"] = a.raw;
            ja["draft"] = a.draft;
            ja["retrieved"] = a.retrieved ? Json(*a.retrieved) : Json(nullptr);
            ja["malformed"] = a.malformed;
            ja["feedback"] = a.feedback ? detail::feedback_to_json(*a.feedback) : Json(nullptr);
            atts.push_back(std::move(ja));
        }
        js["attempts"] = atts;
        js["executed_skill"] = s.executed_skill ? Json(*s.executed_skill) : Json(nullptr);
        js["outcome"] = s.outcome;
        Json ev = Json::array();
        for (const auto& e : s.label_events)
            ev.push_back(Json{{"op", e.op == LabelEvent::Op::push ? "push" : "pop"}, {"label", e.label}});
        js["label_events"] = ev;
        js["inventory_after"] = s.inventory_after;
        js["surroundings_after"] = s.surroundings_after;
        js["steps_used_after"] = s.steps_used_after;
        steps.push_back(std::move(js));
    }
    j["steps"] = steps;
    return j;
}

inline Trajectory trajectory_from_json(const Json& j) {
    Trajectory t;
    t.id = j.at("id").get<std::string>();
    t.task = j.at("task").get<std::string>();
    t.family = j.at("family").get<std::string>();
    t.biome = j.at("biome").get<std::string>();
    t.seed = std::stoull(j.at("seed").get<std::string>());
    t.config_hash = j.at("config_hash").get<std::string>();
    t.status = j.at("status").get<std::string>();
    t.policy = j.at("policy").get<std::string>();
    t.max_revisions = j.at("max_revisions").get<int>();
    t.cot = j.at("cot").get<bool>();
    t.deterministic_world = j.at("deterministic_world").get<bool>();
    t.world_path = j.at("world_path").get<std::string>();
    for (auto it = j.at("labels").begin(); it != j.at("labels").end(); ++it)
        t.labels[it.key()] = {it.value().at("requirements").get<std::string>(),
                              detail::requirement_from_json(it.value().at("goal"))};
    int expect = 0;
    for (const auto& js : j.at("steps")) {
        TrajectoryStep s;
        s.step_index = js.at("step").get<int>();
        if (s.step_index != expect++) throw std::runtime_error("steps are not contiguous");
        s.inventory_text = js.at("inventory").get<std::string>();
        s.surroundings_text = js.at("surroundings").get<std::string>();
        s.prompt_label = js.at("prompt_label").get<std::string>();
        s.active_label = js.at("active_label").get<std::string>();
        s.history = js.at("history").get<std::vector<std::string>>();
        for (const auto& ja : js.at("attempts")) {
            Attempt a;
            a.raw = ja.at("raw").get<std::string>();
            a.draft = ja.at("draft").get<std::string>();
            if (!ja.at("retrieved").is_null()) a.retrieved = ja.at("retrieved").get<std::string>();
            a.malformed = ja.at("malformed").get<bool>();
            if (!ja.at("feedback").is_null()) a.feedback = detail::feedback_from_json(ja.at("feedback"));
            s.attempts.push_back(std::move(a));
        }
        if (!js.at("executed_skill").is_null()) s.executed_skill = js.at("executed_skill").get<std::string>();
        s.outcome = js.at("outcome").get<std::string>();
        for (const auto& e : js.at("label_events")) {
            std::string op = e.at("op").get<std::string>();
            if (op != "push" && op != "pop") throw std::runtime_error("bad label event '" + op + "'");
            s.label_events.push_back({op == "push" ? LabelEvent::Op::push : LabelEvent::Op::pop,
                                      e.at("label").get<std::string>()});
        }
        s.inventory_after = js.at("inventory_after").get<std::string>();
        s.surroundings_after = js.at("surroundings_after").get<std::string>();
        s.steps_used_after = js.at("steps_used_after").get<std::int64_t>();
        t.steps.push_back(std::move(s));
    }
    return t;
}

inline std::string trajectory_text(const Trajectory& t) { return trajectory_to_json(t).dump(2) + "\n"; }

inline void save_trajectory(const Trajectory& t, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << trajectory_text(t);
    }
    std::filesystem::rename(tmp, path);
}

inline Trajectory load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TrajectoryParseError(path.string(), "cannot open");
    try {
        return trajectory_from_json(Json::parse(in));
    } catch (const TrajectoryParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw TrajectoryParseError(path.string(), e.what());
    }
}

// Every *.json under dir, sorted by file name.
inline std::vector<std::filesystem::path> trajectory_files(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::exists(dir)) return out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace craftagent

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "craftagent/prompts.hpp"
#include "craftagent/simulator.hpp"
#include "craftagent/trajectory.hpp"

namespace craftagent {

struct Segment {
    int start = 0;
    int end = 0;  // inclusive
    std::string label;
    bool root = false;
    bool operator==(const Segment&) const = default;
};

// Root span for a successful episode, plus one span per subtask frame that was pushed and later popped.
inline std::vector<Segment> eligible_segments(const Trajectory& t) {
    std::vector<Segment> out;
    if (t.status == "success" && !t.steps.empty()) out.push_back({0, static_cast<int>(t.steps.size()) - 1, t.task, true});
    std::vector<std::pair<std::string, int>> open;  // mirrors the label stack above the root
    for (const auto& s : t.steps) {
        for (const auto& e : s.label_events) {
            if (e.op == LabelEvent::Op::push) {
                open.emplace_back(e.label, s.step_index);
            } else {
                if (open.empty() || open.back().first != e.label)
                    throw std::runtime_error("trajectory " + t.id + ": unbalanced pop of '" + e.label + "'");
                out.push_back({open.back().second, s.step_index, e.label, false});
                open.pop_back();
            }
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Segment& a, const Segment& b) { return std::tie(a.start, a.end) < std::tie(b.start, b.end); });
    return out;
}

struct Provenance {
    std::string trajectory;
    int step = 0;
    std::string label;
    bool relabeled = false;  // label differs from the episode's root task
    bool operator==(const Provenance&) const = default;
};

struct DatasetInstance {
    std::string input;
    std::string output;
    Provenance meta;
    bool operator==(const DatasetInstance&) const = default;
};

// Renders the (input, output) pair for one step under a given label.
inline std::pair<std::string, std::string> render_instance(const Trajectory& t, const TrajectoryStep& s,
                                                           const std::string& label) {
    auto it = t.labels.find(label);
    if (it == t.labels.end()) throw std::runtime_error("trajectory " + t.id + ": unknown label '" + label + "'");
    if (!s.executed_skill) throw std::runtime_error("trajectory " + t.id + ": step without executed skill");
    return render_dataset_pair(label, s.inventory_text, s.surroundings_text, s.history,
                               it->second.requirements_text, *s.executed_skill);
}

inline std::pair<std::string, std::string> regenerate(const Trajectory& t, const Provenance& p) {
    if (p.step < 0 || p.step >= static_cast<int>(t.steps.size()))
        throw std::runtime_error("trajectory " + t.id + ": step " + std::to_string(p.step) + " out of range");
    return render_instance(t, t.steps[p.step], p.label);
}

struct DatasetOptions {
    bool dedup = true;
};

inline std::vector<DatasetInstance> build_dataset(std::vector<const Trajectory*> trajs, const DatasetOptions& opt = {}) {
    std::sort(trajs.begin(), trajs.end(), [](const Trajectory* a, const Trajectory* b) { return a->id < b->id; });
    std::vector<DatasetInstance> all;
    for (const Trajectory* t : trajs) {
        std::set<std::pair<int, std::string>> seen;  // one instance per (step, label)
        std::vector<DatasetInstance> mine;
        auto emit = [&](const TrajectoryStep& s, const std::string& label) {
            if (!s.executed_skill || !seen.insert({s.step_index, label}).second) return;
            auto [in, out] = render_instance(*t, s, label);
            mine.push_back({std::move(in), std::move(out), {t->id, s.step_index, label, label != t->task}});
        };
        for (const auto& seg : eligible_segments(*t)) {
            for (int i = seg.start; i <= seg.end; ++i) {
                const auto& s = t->steps[i];
                emit(s, seg.label);
                if (seg.root && s.active_label != t->task) emit(s, s.active_label);
            }
        }
        std::sort(mine.begin(), mine.end(), [](const DatasetInstance& a, const DatasetInstance& b) {
            return std::tie(a.meta.step, a.meta.label) < std::tie(b.meta.step, b.meta.label);
        });
        for (auto& m : mine) all.push_back(std::move(m));
    }
    if (opt.dedup) {
        std::set<std::pair<std::string, std::string>> texts;
        std::vector<DatasetInstance> kept;
        for (auto& d : all)
            if (texts.insert({d.input, d.output}).second) kept.push_back(std::move(d));
        all = std::move(kept);
    }
    return all;
}

inline std::vector<DatasetInstance> build_dataset(const std::vector<Trajectory>& trajs, const DatasetOptions& opt = {}) {
    std::vector<const Trajectory*> ptrs;
    for (const auto& t : trajs) ptrs.push_back(&t);
    return build_dataset(std::move(ptrs), opt);
}

inline Json instance_to_json(const DatasetInstance& d) {
    return Json{{"input", d.input},
                {"output", d.output},
                {"meta",
                 {{"trajectory", d.meta.trajectory},
                  {"step", d.meta.step},
                  {"label", d.meta.label},
                  {"label_used", d.meta.relabeled ? "relabeled" : "original"}}}};
}

inline DatasetInstance instance_from_json(const Json& j) {
    DatasetInstance d;
    d.input = j.at("input").get<std::string>();
    d.output = j.at("output").get<std::string>();
    const Json& m = j.at("meta");
    d.meta.trajectory = m.at("trajectory").get<std::string>();
    d.meta.step = m.at("step").get<int>();
    d.meta.label = m.at("label").get<std::string>();
    std::string used = m.at("label_used").get<std::string>();
    if (used != "original" && used != "relabeled") throw std::runtime_error("bad label_used '" + used + "'");
    d.meta.relabeled = used == "relabeled";
    return d;
}

inline std::string dataset_jsonl(const std::vector<DatasetInstance>& ds) {
    std::string out;
    for (const auto& d : ds) out += instance_to_json(d).dump() + "\n";
    return out;
}

inline void write_dataset(const std::vector<DatasetInstance>& ds, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << dataset_jsonl(ds);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::vector<DatasetInstance> read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<DatasetInstance> ds;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            ds.push_back(instance_from_json(Json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return ds;
}

struct DatasetSummary {
    std::size_t instances = 0;
    std::size_t relabeled = 0;
    std::map<std::string, std::size_t> per_label;
};

inline DatasetSummary summarize(const std::vector<DatasetInstance>& ds) {
    DatasetSummary s;
    s.instances = ds.size();
    for (const auto& d : ds) {
        s.per_label[d.meta.label]++;
        if (d.meta.relabeled) s.relabeled++;
    }
    return s;
}

inline Json summary_to_json(const DatasetSummary& s) {
    Json per = Json::object();
    for (const auto& [k, v] : s.per_label) per[k] = v;
    return Json{{"instances", s.instances}, {"relabeled", s.relabeled}, {"per_label", per}};
}

// Fisher-Yates with the simulator's generator, so splits are stable across standard libraries.
inline std::pair<std::vector<DatasetInstance>, std::vector<DatasetInstance>>
shuffle_split(std::vector<DatasetInstance> ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw std::invalid_argument("train fraction outside [0, 1]");
    Rng rng(seed);
    for (std::size_t i = ds.size(); i > 1; --i) std::swap(ds[i - 1], ds[rng.below(i)]);
    auto cut = static_cast<std::size_t>(train_fraction * static_cast<double>(ds.size()) + 0.5);
    std::vector<DatasetInstance> val(std::make_move_iterator(ds.begin() + static_cast<std::ptrdiff_t>(cut)),
                                     std::make_move_iterator(ds.end()));
    ds.resize(cut);
    return {std::move(ds), std::move(val)};
}

struct LoadedTrajectories {
    std::vector<Trajectory> trajectories;
    std::vector<TrajectoryParseError> errors;
};

// Corrupt files are reported individually; the rest still load.
inline LoadedTrajectories load_trajectories(const std::filesystem::path& dir) {
    LoadedTrajectories out;
    for (const auto& f : trajectory_files(dir)) {
        try {
            out.trajectories.push_back(load_trajectory(f));
        } catch (const TrajectoryParseError& e) {
            out.errors.push_back(e);
        }
    }
    return out;
}

}  // namespace craftagent

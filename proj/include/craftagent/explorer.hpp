#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "craftagent/policy.hpp"
#include "craftagent/prompts.hpp"
#include "craftagent/retrieval.hpp"
#include "craftagent/simulator.hpp"
#include "craftagent/trajectory.hpp"
#include "craftagent/world.hpp"

namespace craftagent {

struct RevisionBudget {
    int T = 5;
};

class LabelStack {
public:
    explicit LabelStack(TaskDef root) { frames_.push_back(std::move(root)); }
    const TaskDef& top() const { return frames_.back(); }
    const TaskDef& root() const { return frames_.front(); }
    std::size_t size() const { return frames_.size(); }
    const std::vector<TaskDef>& frames() const { return frames_; }
    void push(TaskDef t) { frames_.push_back(std::move(t)); }
    TaskDef pop() {
        if (frames_.size() <= 1) throw std::logic_error("cannot pop the root label");
        TaskDef t = std::move(frames_.back());
        frames_.pop_back();
        return t;
    }

private:
    std::vector<TaskDef> frames_;
};

// Every non-root frame must be a (possibly nested) subtask of the frame beneath it,
// and the top frame must be incomplete unless it is the root.
inline std::optional<std::string> audit_label_stack(const WorldModel& w, const LabelStack& st, const EpisodeState& s) {
    const auto& f = st.frames();
    for (std::size_t i = 1; i < f.size(); ++i) {
        bool found = false;
        std::vector<TaskDef> todo = subtasks_of(w, f[i - 1]);
        for (std::size_t k = 0; k < todo.size() && !found; ++k) {
            if (todo[k].name == f[i].name && todo[k].goal == f[i].goal) found = true;
            for (auto& sub : subtasks_of(w, todo[k])) todo.push_back(std::move(sub));
            if (todo.size() > 100000) break;
        }
        if (!found) return "frame '" + f[i].name + "' is not a subtask of '" + f[i - 1].name + "'";
    }
    if (f.size() > 1 && subtask_progress(s, f.back()) == Progress::complete)
        return "top frame '" + f.back().name + "' is already complete";
    return std::nullopt;
}

namespace detail {

inline void deepest_match(const WorldModel& w, const EpisodeState& s, const TaskDef& node, const std::string& item,
                          int depth, int& best_depth, std::optional<TaskDef>& best) {
    for (auto& sub : subtasks_of(w, node)) {
        if (subtask_progress(s, sub) == Progress::complete) continue;
        if (sub.goal.item == item && depth + 1 > best_depth) {
            best_depth = depth + 1;
            best = sub;
        }
        deepest_match(w, s, sub, item, depth + 1, best_depth, best);
    }
}

}  // namespace detail

inline std::vector<LabelEvent> relabel_push(LabelStack& st, const Skill& skill, const WorldModel& w,
                                            const EpisodeState& s) {
    const std::string& item = skill.primary_product();
    if (item == st.top().goal.item) return {};
    int best_depth = 0;
    std::optional<TaskDef> best;
    detail::deepest_match(w, s, st.top(), item, 0, best_depth, best);
    if (!best) return {};
    st.push(*best);
    return {{LabelEvent::Op::push, best->name}};
}

inline std::vector<LabelEvent> relabel_pop(LabelStack& st, const EpisodeState& s) {
    std::vector<LabelEvent> ev;
    while (st.size() > 1 && subtask_progress(s, st.top()) == Progress::complete) ev.push_back({LabelEvent::Op::pop, st.pop().name});
    return ev;
}

struct ExplorerConfig {
    RevisionBudget budget;
    bool cot = false;
};

struct StepFailure {};

struct Decision {
    const Skill* skill = nullptr;  // nullptr on StepFailure
    std::vector<Attempt> attempts;
    bool step_failure() const { return skill == nullptr; }
};

struct DecisionInputs {
    const WorldModel* world = nullptr;
    const EpisodeState* state = nullptr;
    const TaskDef* label = nullptr;
    std::vector<std::string> history;
    std::string episode_id;
    int step_index = 0;
    std::uint64_t episode_seed = 0;
};

// Query, retrieve, check; on failure revise up to T times.
inline Decision decide_with_revision(const DecisionInputs& in, Policy& policy, const Retriever& retriever,
                                     const SimilarityProvider& sim, const ExplorerConfig& cfg,
                                     const ResponseSink& sink = {}) {
    const EpisodeState& s = *in.state;
    auto [inv, surr] = observe(s);
    std::string reqs = render_requirements(in.label->requirements);
    const std::string& label = in.label->name;
    PromptBundle prompt = cfg.cot ? render_cot(label, reqs, inv, surr) : render_decision(label, inv, surr, in.history, reqs);
    PolicyContext ctx{in.world, in.state, in.episode_seed};
    Decision d;
    for (int round = 0; round <= cfg.budget.T; ++round) {
        PolicyQuery q{prompt, round, in.episode_id, in.step_index};
        PolicyResponse r = policy.query(q, ctx);
        if (sink) sink(q, r);
        Attempt a;
        a.raw = r.raw_text;
        try {
            ParsedAction p = parse_output(r.raw_text);
            a.draft = p.text;
            const Skill* sk = in.world->find_skill(retriever.retrieve(p, sim));
            a.retrieved = sk->description;
            a.feedback = check(s, *sk);
            d.attempts.push_back(a);
            if (!a.feedback) {
                d.skill = sk;
                return d;
            }
            if (round < cfg.budget.T) prompt = render_revision(prompt, a.draft, sk->description, inv, surr, *a.feedback);
        } catch (const MalformedOutput&) {
            a.malformed = true;
            d.attempts.push_back(a);
            if (round < cfg.budget.T) prompt = render_malformed_revision(prompt, a.draft);
        }
    }
    return d;
}

struct EpisodeSpec {
    TaskDef task;
    std::string episode_id;
    std::uint64_t seed = 0;
};

struct TrajectoryMeta {
    std::string config_hash;
    std::string world_path;
    bool deterministic_world = false;
};

inline Trajectory run_episode(const WorldModel& w, const EpisodeSpec& spec, Policy& policy,
                              const SimilarityProvider& sim, const ExplorerConfig& cfg, const TrajectoryMeta& meta = {},
                              const ResponseSink& sink = {}) {
    Retriever retriever = make_retriever(w);
    EpisodeState s = start_episode(spec.task, spec.seed);
    LabelStack stack(spec.task);
    Trajectory tr;
    tr.id = spec.episode_id;
    tr.task = spec.task.name;
    tr.family = spec.task.family;
    tr.biome = spec.task.biome;
    tr.seed = spec.seed;
    tr.config_hash = meta.config_hash;
    tr.policy = policy.tag();
    tr.max_revisions = cfg.budget.T;
    tr.cot = cfg.cot;
    tr.deterministic_world = meta.deterministic_world;
    tr.world_path = meta.world_path;
    auto note_label = [&](const TaskDef& t) {
        tr.labels.emplace(t.name, LabelInfo{render_requirements(t.requirements), t.goal});
    };
    note_label(spec.task);
    std::vector<std::string> history;
    tr.status = s.done == Done::success ? "success" : "failure";

    for (int step = 0; s.done == Done::running; ++step) {
        TrajectoryStep ts;
        ts.step_index = step;
        std::tie(ts.inventory_text, ts.surroundings_text) = observe(s);
        ts.prompt_label = stack.top().name;
        ts.history = history;
        DecisionInputs in{&w, &s, &stack.top(), history, spec.episode_id, step, spec.seed};
        Decision d;
        try {
            d = decide_with_revision(in, policy, retriever, sim, cfg, sink);
        } catch (const PolicyUnavailable&) {
            ts.active_label = ts.prompt_label;
            ts.outcome = "policy_unavailable";
            std::tie(ts.inventory_after, ts.surroundings_after) = observe(s);
            ts.steps_used_after = s.steps_used;
            tr.steps.push_back(std::move(ts));
            tr.status = "policy_unavailable";
            return tr;
        }
        ts.attempts = std::move(d.attempts);
        if (d.step_failure()) {
            ts.active_label = ts.prompt_label;
            ts.outcome = "step_failure";
            std::tie(ts.inventory_after, ts.surroundings_after) = observe(s);
            ts.steps_used_after = s.steps_used;
            tr.steps.push_back(std::move(ts));
            tr.status = "failure";
            return tr;
        }
        ts.label_events = relabel_push(stack, *d.skill, w, s);
        if (!ts.label_events.empty()) note_label(stack.top());
        ts.active_label = stack.top().name;
        Outcome o = execute(s, *d.skill);
        ts.executed_skill = d.skill->description;
        ts.outcome = std::string(to_string(o));
        for (auto& e : relabel_pop(stack, s)) ts.label_events.push_back(std::move(e));
        std::tie(ts.inventory_after, ts.surroundings_after) = observe(s);
        ts.steps_used_after = s.steps_used;
        tr.steps.push_back(std::move(ts));
        if (o == Outcome::applied) {
            history.push_back(d.skill->description);
            if (history.size() > 3) history.erase(history.begin());
        }
    }
    tr.status = s.done == Done::success ? "success" : "failure";
    return tr;
}

struct TaskResult {
    std::string task;
    std::string family;
    int episodes = 0;  // episodes that ended in success or failure
    int successes = 0;
    int policy_unavailable = 0;
    std::int64_t decision_steps = 0;
    std::int64_t revisions = 0;
};

struct CampaignResult {
    std::vector<TaskResult> tasks;
    std::vector<Trajectory> trajectories;  // empty unless kept
};

struct CampaignSpec {
    std::vector<TaskDef> tasks;  // biome overrides already applied
    int episodes_per_task = 1;
    std::uint64_t seed = 0;
    int parallel = 1;
    bool keep_trajectories = false;
    ExplorerConfig explorer;
    TrajectoryMeta meta;
};

inline std::string episode_id(std::size_t task_index, const std::string& task, std::size_t episode) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02zu-", task_index);
    std::string id = buf + task;
    std::snprintf(buf, sizeof buf, "-e%03zu", episode);
    return id + buf;
}

inline std::uint64_t episode_seed(std::uint64_t campaign_seed, std::size_t task_index, std::size_t episode) {
    return mix_seed({campaign_seed, task_index, episode});
}

using TrajectoryWriter = std::function<void(const Trajectory&)>;

inline CampaignResult run_campaign(const WorldModel& w, const CampaignSpec& spec, Policy& policy,
                                   const SimilarityProvider& sim, const TrajectoryWriter& writer = {},
                                   const ResponseSink& sink = {}) {
    std::size_t n_tasks = spec.tasks.size();
    std::size_t per = static_cast<std::size_t>(std::max(0, spec.episodes_per_task));
    std::size_t total = n_tasks * per;
    std::vector<std::optional<Trajectory>> slots(total);
    std::mutex write_mu;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex fail_mu;

    auto worker = [&] {
        for (;;) {
            std::size_t k = next.fetch_add(1);
            if (k >= total) return;
            std::size_t ti = k / per, ei = k % per;
            const TaskDef& task = spec.tasks[ti];
            EpisodeSpec es{task, episode_id(ti, task.name, ei), episode_seed(spec.seed, ti, ei)};
            try {
                Trajectory t = run_episode(w, es, policy, sim, spec.explorer, spec.meta, sink);
                if (writer) {
                    std::lock_guard<std::mutex> lk(write_mu);
                    writer(t);
                }
                slots[k] = std::move(t);
            } catch (...) {
                std::lock_guard<std::mutex> lk(fail_mu);
                if (!failure) failure = std::current_exception();
                next.store(total);
                return;
            }
        }
    };
    int threads = std::max(1, std::min<int>(spec.parallel, static_cast<int>(std::max<std::size_t>(total, 1))));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    CampaignResult res;
    for (std::size_t ti = 0; ti < n_tasks; ++ti) {
        TaskResult tr{spec.tasks[ti].name, spec.tasks[ti].family};
        for (std::size_t ei = 0; ei < per; ++ei) {
            const Trajectory& t = *slots[ti * per + ei];
            if (t.status == "policy_unavailable") {
                tr.policy_unavailable++;
            } else {
                tr.episodes++;
                if (t.status == "success") tr.successes++;
            }
            for (const auto& st : t.steps) {
                tr.decision_steps++;
                if (!st.attempts.empty()) tr.revisions += static_cast<std::int64_t>(st.attempts.size()) - 1;
            }
        }
        res.tasks.push_back(std::move(tr));
    }
    if (spec.keep_trajectories)
        for (auto& s : slots) res.trajectories.push_back(std::move(*s));
    return res;
}

}  // namespace craftagent

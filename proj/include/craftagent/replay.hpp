#pragma once

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "craftagent/explorer.hpp"
#include "craftagent/policy.hpp"
#include "craftagent/trajectory.hpp"
#include "craftagent/world.hpp"

namespace craftagent {

namespace detail {

// Answers with the raw outputs stored in the trajectory itself.
class RecordedPolicy : public Policy {
public:
    explicit RecordedPolicy(const Trajectory& t) : tag_(t.policy) {
        for (const auto& s : t.steps) {
            for (std::size_t r = 0; r < s.attempts.size(); ++r)
                transcript_.add({t.id, s.step_index, static_cast<int>(r), s.attempts[r].raw, t.policy, 0});
            if (s.outcome == "policy_unavailable") unavailable_.insert({t.id, s.step_index});
        }
    }
    PolicyResponse query(const PolicyQuery& q, const PolicyContext&) override {
        if (const std::string* raw = transcript_.find({q.episode_id, q.step_index, q.revision_round})) return {*raw, {}, tag_};
        if (q.revision_round == 0 && unavailable_.count({q.episode_id, q.step_index}))
            throw PolicyUnavailable("recorded as unavailable");
        throw TranscriptExhausted("no recorded output for step " + std::to_string(q.step_index) + " round " +
                                  std::to_string(q.revision_round));
    }
    std::string tag() const override { return tag_; }

private:
    std::string tag_;
    Transcript transcript_;
    std::set<std::pair<std::string, int>> unavailable_;
};

}  // namespace detail

struct ReplayReport {
    std::vector<std::string> differences;  // JSON pointer paths, or a reason
    bool clean() const { return differences.empty(); }
};

// `world` must already be in the recorded mode (deterministic or not).
inline ReplayReport replay_trajectory(const Trajectory& recorded, const WorldModel& world,
                                      const SimilarityProvider& sim, std::size_t max_differences = 20) {
    ReplayReport rep;
    const TaskDef* base = world.find_task(recorded.task);
    if (!base) {
        rep.differences.push_back("task '" + recorded.task + "' is not in the world");
        return rep;
    }
    TaskDef task = *base;
    task.biome = recorded.biome;
    detail::RecordedPolicy policy(recorded);
    ExplorerConfig cfg;
    cfg.budget.T = recorded.max_revisions;
    cfg.cot = recorded.cot;
    TrajectoryMeta meta{recorded.config_hash, recorded.world_path, recorded.deterministic_world};
    Trajectory again;
    try {
        again = run_episode(world, {task, recorded.id, recorded.seed}, policy, sim, cfg, meta);
    } catch (const std::exception& e) {
        rep.differences.push_back(std::string("replay stopped: ") + e.what());
        return rep;
    }
    Json a = trajectory_to_json(recorded), b = trajectory_to_json(again);
    if (a == b) return rep;
    for (const auto& op : Json::diff(a, b)) {
        if (rep.differences.size() >= max_differences) break;
        rep.differences.push_back(op.at("op").get<std::string>() + " " + op.at("path").get<std::string>());
    }
    return rep;
}

}  // namespace craftagent

#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "craftagent/prompts.hpp"
#include "craftagent/simulator.hpp"
#include "craftagent/world.hpp"

namespace craftagent {

struct PolicyQuery {
    PromptBundle prompt;
    int revision_round = 0;
    std::string episode_id;
    int step_index = 0;
};

struct PolicyResponse {
    std::string raw_text;
    std::chrono::milliseconds latency{0};
    std::string provider_tag;
};

// What a policy may look at besides the prompt. Only oracle policies read state.
struct PolicyContext {
    const WorldModel* world = nullptr;
    const EpisodeState* state = nullptr;
    std::uint64_t episode_seed = 0;
};

struct PolicyUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TranscriptExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual PolicyResponse query(const PolicyQuery& q, const PolicyContext& ctx) = 0;
    virtual std::string tag() const = 0;
};

inline constexpr std::string_view kOracleSentinel = "Next skill: none";

namespace detail {

inline const Skill* dfs_next(const WorldModel& w, const EpisodeState& s, const Requirement& need, int depth) {
    if (depth > 64 || s.amount(need.item) >= need.quantity) return nullptr;
    const Skill* p = w.cheapest_producer(need.item);
    if (!p) return nullptr;
    for (const auto& r : p->preconditions)
        if (s.amount(r.item) < r.quantity) return dfs_next(w, s, r, depth + 1);
    return p;
}

}  // namespace detail

// Next step of the depth-first plan toward the episode's root task, or nullptr.
inline const Skill* oracle_next_skill(const WorldModel& w, const EpisodeState& s) {
    const TaskDef& t = s.task;
    if (goal_met(s, t.goal)) return nullptr;
    for (const auto& r : t.requirements)
        if (s.amount(r.item) < r.quantity) return detail::dfs_next(w, s, r, 1);
    return w.cheapest_producer(t.goal.item);
}

class OraclePolicy : public Policy {
public:
    PolicyResponse query(const PolicyQuery&, const PolicyContext& ctx) override {
        if (!ctx.world || !ctx.state) throw std::logic_error("oracle policy needs world and state");
        const Skill* s = oracle_next_skill(*ctx.world, *ctx.state);
        return {s ? "Next skill: " + s->description : std::string(kOracleSentinel), {}, tag()};
    }
    std::string tag() const override { return "oracle"; }
};

class NoisyOraclePolicy : public Policy {
public:
    explicit NoisyOraclePolicy(double corruption_rate) : p_(corruption_rate) {}

    PolicyResponse query(const PolicyQuery& q, const PolicyContext& ctx) override {
        if (!ctx.world || !ctx.state) throw std::logic_error("noisy oracle policy needs world and state");
        if (q.revision_round == 0) {
            // stateless stream so parallel episodes stay reproducible
            Rng rng(mix_seed({ctx.episode_seed, 0x6e6f697379ULL, static_cast<std::uint64_t>(q.step_index)}));
            if (rng.uniform() < p_) {
                std::vector<const Skill*> bad;
                for (const auto& s : ctx.world->skills)
                    if (check(*ctx.state, s)) bad.push_back(&s);
                if (!bad.empty())
                    return {"Next skill: " + bad[rng.below(bad.size())]->description, {}, tag()};
            }
        }
        auto r = oracle_.query(q, ctx);
        r.provider_tag = tag();
        return r;
    }
    std::string tag() const override { return "noisy-oracle"; }

private:
    double p_;
    OraclePolicy oracle_;
};

struct TranscriptEntry {
    std::string episode_id;
    int step_index = 0;
    int revision_round = 0;
    std::string raw_text;
    std::string provider_tag;
    std::int64_t latency_ms = 0;
};

inline Json transcript_entry_to_json(const TranscriptEntry& e) {
    return Json{{"episode_id", e.episode_id},         {"step_index", e.step_index},
                {"revision_round", e.revision_round}, {"raw_text", e.raw_text},
                {"provider_tag", e.provider_tag},     {"latency_ms", e.latency_ms}};
}

inline TranscriptEntry transcript_entry_from_json(const Json& j) {
    TranscriptEntry e;
    e.episode_id = j.at("episode_id").get<std::string>();
    e.step_index = j.at("step_index").get<int>();
    e.revision_round = j.at("revision_round").get<int>();
    e.raw_text = j.at("raw_text").get<std::string>();
    if (j.contains("provider_tag")) e.provider_tag = j.at("provider_tag").get<std::string>();
    if (j.contains("latency_ms")) e.latency_ms = j.at("latency_ms").get<std::int64_t>();
    return e;
}

class Transcript {
public:
    using Key = std::tuple<std::string, int, int>;
    void add(const TranscriptEntry& e) { entries_[{e.episode_id, e.step_index, e.revision_round}] = e.raw_text; }
    const std::string* find(const Key& k) const {
        auto it = entries_.find(k);
        return it == entries_.end() ? nullptr : &it->second;
    }
    std::size_t size() const { return entries_.size(); }

    static Transcript load_jsonl(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open transcript " + path);
        Transcript t;
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                t.add(transcript_entry_from_json(Json::parse(line)));
            } catch (const std::exception& e) {
                throw std::runtime_error(path + ":" + std::to_string(n) + ": bad transcript line: " + e.what());
            }
        }
        return t;
    }

private:
    std::map<Key, std::string> entries_;
};

class PlaybackPolicy : public Policy {
public:
    explicit PlaybackPolicy(Transcript t) : t_(std::move(t)) {}
    PolicyResponse query(const PolicyQuery& q, const PolicyContext&) override {
        const std::string* raw = t_.find({q.episode_id, q.step_index, q.revision_round});
        if (!raw)
            throw TranscriptExhausted("no recorded response for " + q.episode_id + " step " +
                                      std::to_string(q.step_index) + " round " + std::to_string(q.revision_round));
        return {*raw, {}, tag()};
    }
    std::string tag() const override { return "playback"; }

private:
    Transcript t_;
};

// Append-only JSONL journal, flushed per entry so responses survive a crash before parsing.
class TranscriptJournal {
public:
    explicit TranscriptJournal(const std::string& path) : out_(path, std::ios::app) {
        if (!out_) throw std::runtime_error("cannot open transcript journal " + path);
    }
    void write(const PolicyQuery& q, const PolicyResponse& r) {
        TranscriptEntry e{q.episode_id, q.step_index, q.revision_round, r.raw_text, r.provider_tag, r.latency.count()};
        std::lock_guard<std::mutex> lk(mu_);
        out_ << transcript_entry_to_json(e).dump() << '\n';
        out_.flush();
    }

private:
    std::mutex mu_;
    std::ofstream out_;
};

using ResponseSink = std::function<void(const PolicyQuery&, const PolicyResponse&)>;

}  // namespace craftagent

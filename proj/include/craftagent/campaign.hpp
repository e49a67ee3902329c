#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "craftagent/explorer.hpp"
#include "craftagent/http.hpp"
#include "craftagent/metrics.hpp"
#include "craftagent/policy.hpp"
#include "craftagent/retrieval.hpp"
#include "craftagent/trajectory.hpp"
#include "craftagent/world.hpp"

namespace craftagent {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PolicyConfig {
    std::string type = "oracle";  // llm | oracle | noisy-oracle | playback
    double corruption_rate = 0.3;
    std::string transcript;  // playback
    EndpointConfig endpoint;  // llm
};

struct SimilarityConfig {
    std::string mode = "lexical";  // lexical | embedding
    EndpointConfig endpoint;
};

struct CampaignConfig {
    std::string world = "worlds/plan4mc_default.json";
    std::vector<std::string> tasks{"eval"};  // selectors, optionally "name@biome"
    int episodes = 1;
    int max_revisions = 5;
    bool cot = false;
    PolicyConfig policy;
    SimilarityConfig similarity;
    std::uint64_t seed = 0;
    int parallel = 1;
    std::string out = "out";
    bool deterministic_world = false;
    bool record_transcripts = false;
};

inline Json config_to_json(const CampaignConfig& c) {
    Json pol = {{"type", c.policy.type}, {"corruption_rate", c.policy.corruption_rate},
                {"transcript", c.policy.transcript}, {"endpoint", endpoint_to_json(c.policy.endpoint)}};
    Json sim = {{"mode", c.similarity.mode}, {"endpoint", endpoint_to_json(c.similarity.endpoint)}};
    return Json{{"world", c.world},
                {"tasks", c.tasks},
                {"episodes", c.episodes},
                {"max_revisions", c.max_revisions},
                {"cot", c.cot},
                {"policy", pol},
                {"similarity", sim},
                {"seed", std::to_string(c.seed)},
                {"parallel", c.parallel},
                {"out", c.out},
                {"deterministic_world", c.deterministic_world},
                {"record_transcripts", c.record_transcripts}};
}

namespace detail {

inline std::uint64_t seed_from_json(const Json& v) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
            return std::stoull(s);
    }
    throw ConfigError("seed must be a non-negative integer");
}

}  // namespace detail

inline CampaignConfig config_from_json(const Json& j) {
    static const std::set<std::string> known = {"world",    "tasks",  "episodes", "max_revisions",       "cot",
                                                "policy",   "similarity", "seed", "parallel",            "out",
                                                "deterministic_world", "record_transcripts"};
    if (!j.is_object()) throw ConfigError("campaign config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()) && it.key().rfind('_', 0) != 0) throw ConfigError("unknown config key '" + it.key() + "'");
    CampaignConfig c;
    try {
        c.world = j.value("world", c.world);
        if (j.contains("tasks")) {
            c.tasks.clear();
            const Json& t = j.at("tasks");
            if (t.is_string()) {
                c.tasks.push_back(t.get<std::string>());
            } else {
                for (const auto& x : t) {
                    if (x.is_string()) {
                        c.tasks.push_back(x.get<std::string>());
                    } else {
                        std::string sel = x.at("name").get<std::string>();
                        if (x.contains("biome")) sel += "@" + x.at("biome").get<std::string>();
                        c.tasks.push_back(sel);
                    }
                }
            }
        }
        c.episodes = j.value("episodes", c.episodes);
        c.max_revisions = j.value("max_revisions", c.max_revisions);
        c.cot = j.value("cot", c.cot);
        if (j.contains("policy")) {
            const Json& p = j.at("policy");
            if (p.is_string()) {
                c.policy.type = p.get<std::string>();
            } else {
                c.policy.type = p.value("type", c.policy.type);
                c.policy.corruption_rate = p.value("corruption_rate", c.policy.corruption_rate);
                c.policy.transcript = p.value("transcript", c.policy.transcript);
                if (p.contains("endpoint")) c.policy.endpoint = endpoint_from_json(p.at("endpoint"));
            }
        }
        if (j.contains("similarity")) {
            const Json& s = j.at("similarity");
            c.similarity.mode = s.value("mode", c.similarity.mode);
            if (s.contains("endpoint")) c.similarity.endpoint = endpoint_from_json(s.at("endpoint"));
        }
        if (j.contains("seed")) c.seed = detail::seed_from_json(j.at("seed"));
        c.parallel = j.value("parallel", c.parallel);
        c.out = j.value("out", c.out);
        c.deterministic_world = j.value("deterministic_world", c.deterministic_world);
        c.record_transcripts = j.value("record_transcripts", c.record_transcripts);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad campaign config: ") + e.what());
    }
    return c;
}

inline void validate_config(const CampaignConfig& c) {
    static const std::set<std::string> policies = {"llm", "oracle", "noisy-oracle", "playback"};
    if (!policies.count(c.policy.type)) throw ConfigError("unknown policy '" + c.policy.type + "'");
    if (c.similarity.mode != "lexical" && c.similarity.mode != "embedding")
        throw ConfigError("unknown similarity mode '" + c.similarity.mode + "'");
    if (c.episodes < 0) throw ConfigError("episodes must be >= 0");
    if (c.max_revisions < 0) throw ConfigError("max_revisions must be >= 0");
    if (c.parallel < 1) throw ConfigError("parallel must be >= 1");
    if (c.policy.corruption_rate < 0 || c.policy.corruption_rate > 1) throw ConfigError("corruption_rate outside [0, 1]");
    if (c.policy.type == "playback" && c.policy.transcript.empty()) throw ConfigError("playback needs a transcript file");
    if (c.policy.type == "llm" && c.policy.endpoint.model.empty()) throw ConfigError("llm policy needs a model name");
}

inline CampaignConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open campaign config " + path);
    try {
        return config_from_json(Json::parse(in));
    } catch (const Json::parse_error& e) {
        throw ConfigError("campaign config " + path + ": " + e.what());
    }
}

// FNV-1a of the canonical config; output location and parallelism do not change results.
inline std::string config_hash(const CampaignConfig& c) {
    Json j = config_to_json(c);
    j.erase("out");
    j.erase("parallel");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        cur.erase(0, cur.find_first_not_of(" \t"));
        cur.erase(cur.find_last_not_of(" \t") + 1);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

// Selectors: a family name (log, stone, mob, iron), "eval" (log+stone+mob), "all", or a task name;
// "selector@biome" overrides the biome of every task it selects.
inline std::vector<TaskDef> resolve_tasks(const WorldModel& w, const std::vector<std::string>& selectors) {
    std::vector<TaskDef> out;
    for (const auto& raw : selectors) {
        std::string sel = raw, biome;
        if (auto at = raw.find('@'); at != std::string::npos) {
            sel = raw.substr(0, at);
            biome = raw.substr(at + 1);
            if (biome.empty()) throw ConfigError("empty biome in task selector '" + raw + "'");
        }
        std::vector<TaskDef> picked;
        bool family = false;
        for (const auto& t : w.tasks) {
            bool hit = sel == "all" || t.family == sel ||
                       (sel == "eval" && (t.family == "log" || t.family == "stone" || t.family == "mob"));
            if (hit) {
                picked.push_back(t);
                family = true;
            }
        }
        if (!family) {
            const TaskDef* t = w.find_task(sel);
            if (!t) throw ConfigError("unknown task or task family '" + sel + "'");
            picked.push_back(*t);
        }
        for (auto& t : picked) {
            if (!biome.empty()) t.biome = biome;
            out.push_back(std::move(t));
        }
    }
    return out;
}

inline std::unique_ptr<Policy> make_policy(const PolicyConfig& p) {
    if (p.type == "oracle") return std::make_unique<OraclePolicy>();
    if (p.type == "noisy-oracle") return std::make_unique<NoisyOraclePolicy>(p.corruption_rate);
    if (p.type == "playback") {
        try {
            return std::make_unique<PlaybackPolicy>(Transcript::load_jsonl(p.transcript));
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    if (p.type == "llm") return std::make_unique<LlmPolicy>(p.endpoint);
    throw ConfigError("unknown policy '" + p.type + "'");
}

inline std::unique_ptr<SimilarityProvider> make_similarity(const SimilarityConfig& s, const WorldModel& w) {
    if (s.mode == "embedding") return std::make_unique<EmbeddingSimilarity>(s.endpoint);
    return std::make_unique<LexicalSimilarity>(w.synonyms);
}

inline WorldModel load_campaign_world(const CampaignConfig& c) {
    WorldModel w;
    try {
        w = load_world(c.world);
    } catch (const WorldError& e) {
        throw ConfigError(e.what());
    }
    return c.deterministic_world ? deterministic_world(std::move(w)) : w;
}

struct CampaignRun {
    CampaignResult result;
    SuccessTable table;
    std::string hash;
    std::vector<std::filesystem::path> trajectory_files;
};

// Output layout under c.out:
//   trajectories/<episode id>.json   one document per episode, written as episodes finish
//   journal.jsonl                    every policy response, appended before it is parsed
//   transcripts.jsonl                responses sorted by key (with record_transcripts)
//   campaign.json, success.txt, success.csv
inline CampaignRun run_campaign_to_disk(const CampaignConfig& c, bool write_trajectories = true) {
    validate_config(c);
    WorldModel w = load_campaign_world(c);
    CampaignSpec spec;
    spec.tasks = resolve_tasks(w, c.tasks);
    spec.episodes_per_task = c.episodes;
    spec.seed = c.seed;
    spec.parallel = c.parallel;
    spec.explorer.budget.T = c.max_revisions;
    spec.explorer.cot = c.cot;
    CampaignRun run;
    run.hash = config_hash(c);
    spec.meta = {run.hash, c.world, c.deterministic_world};
    auto policy = make_policy(c.policy);
    auto sim = make_similarity(c.similarity, w);

    namespace fs = std::filesystem;
    fs::path out(c.out);
    fs::create_directories(out / "trajectories");
    fs::remove(out / "journal.jsonl");
    auto journal = std::make_unique<TranscriptJournal>((out / "journal.jsonl").string());
    std::mutex rec_mu;
    std::vector<TranscriptEntry> recorded;
    ResponseSink sink = [&](const PolicyQuery& q, const PolicyResponse& r) {
        journal->write(q, r);
        if (c.record_transcripts) {
            std::lock_guard<std::mutex> lk(rec_mu);
            recorded.push_back({q.episode_id, q.step_index, q.revision_round, r.raw_text, r.provider_tag, 0});
        }
    };
    TrajectoryWriter writer;
    if (write_trajectories)
        writer = [&](const Trajectory& t) {
            fs::path p = out / "trajectories" / (t.id + ".json");
            save_trajectory(t, p);
            run.trajectory_files.push_back(p);
        };
    run.result = run_campaign(w, spec, *policy, *sim, writer, sink);
    run.table = success_table(run.result.tasks);
    std::sort(run.trajectory_files.begin(), run.trajectory_files.end());

    if (c.record_transcripts) {
        std::sort(recorded.begin(), recorded.end(), [](const TranscriptEntry& a, const TranscriptEntry& b) {
            return std::tie(a.episode_id, a.step_index, a.revision_round) <
                   std::tie(b.episode_id, b.step_index, b.revision_round);
        });
        std::ofstream t(out / "transcripts.jsonl", std::ios::binary);
        for (const auto& e : recorded) t << transcript_entry_to_json(e).dump() << '\n';
    }
    Json summary = {{"config", config_to_json(c)}, {"config_hash", run.hash}};
    Json tasks = Json::array();
    for (const auto& r : run.result.tasks)
        tasks.push_back({{"task", r.task},
                         {"family", r.family},
                         {"episodes", r.episodes},
                         {"successes", r.successes},
                         {"policy_unavailable", r.policy_unavailable},
                         {"decision_steps", r.decision_steps},
                         {"revisions", r.revisions}});
    summary["results"] = tasks;
    std::ofstream(out / "campaign.json", std::ios::binary) << summary.dump(2) << '\n';
    std::ofstream(out / "success.txt", std::ios::binary) << render_success_text(run.table);
    std::ofstream(out / "success.csv", std::ios::binary) << render_success_csv(run.table);
    return run;
}

}  // namespace craftagent

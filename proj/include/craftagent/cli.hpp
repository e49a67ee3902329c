#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "craftagent/campaign.hpp"
#include "craftagent/dataset.hpp"
#include "craftagent/prompts.hpp"
#include "craftagent/replay.hpp"

namespace craftagent {

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitInfra = 3, kExitDivergence = 4 };

// "2.0 log; 3.0 dirt" -> container; "nothing" or "" -> empty
inline Container parse_container(const std::string& text) {
    Container c;
    for (const auto& part : split_list(text, ';')) {
        if (part == "nothing") continue;
        auto sp = part.find(' ');
        if (sp == std::string::npos) throw ConfigError("expected '<quantity> <item>' but got '" + part + "'");
        std::string item = part.substr(sp + 1);
        item.erase(0, item.find_first_not_of(' '));
        try {
            c.add(item, Quantity::parse(part.substr(0, sp)));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("bad quantity in '" + part + "': " + e.what());
        }
    }
    return c;
}

inline std::vector<Requirement> parse_requirements(const std::string& text) {
    std::vector<Requirement> out;
    for (const auto& part : split_list(text, ';')) {
        if (part == "nothing") continue;
        Container one = parse_container(part);
        auto sp = part.find(' ');
        std::string item = part.substr(sp + 1);
        item.erase(0, item.find_first_not_of(' '));
        out.push_back({item, one.get(item)});
    }
    return out;
}

namespace detail {

struct CampaignFlags {
    std::string config, world, tasks, policy, transcript, out, model, base_url, api_key_env, similarity, embedding_model,
        embedding_url;
    int episodes = 0, max_revisions = 0, parallel = 0, max_retries = 0, max_in_flight = 0;
    double corruption_rate = 0, timeout = 0;
    std::uint64_t seed = 0;
    bool cot = false, record = false, deterministic = false;
    std::vector<CLI::Option*> given;

    void add(CLI::App* app, const std::string& default_out) {
        out = default_out;
        app->add_option("--config", config, "campaign config JSON");
        app->add_option("--world", world, "world config JSON");
        app->add_option("--tasks", tasks, "comma-separated selectors: log, stone, mob, iron, eval, all, task[@biome]");
        app->add_option("--episodes", episodes, "episodes per task");
        app->add_option("--max-revisions", max_revisions, "revision budget T");
        app->add_flag("--cot", cot, "use the requirement-gap prompt");
        app->add_option("--policy", policy, "llm | oracle | noisy-oracle | playback");
        app->add_option("--corruption-rate", corruption_rate, "noisy-oracle corruption probability");
        app->add_option("--transcript", transcript, "transcript JSONL for playback");
        app->add_option("--seed", seed, "campaign seed");
        app->add_option("--parallel", parallel, "episodes run concurrently");
        app->add_option("--out", out, "output directory");
        app->add_flag("--record-transcripts", record, "write a sorted transcripts.jsonl");
        app->add_flag("--deterministic-world", deterministic, "force every skill to succeed");
        app->add_option("--model", model, "chat model name");
        app->add_option("--base-url", base_url, "OpenAI-compatible base URL");
        app->add_option("--api-key-env", api_key_env, "environment variable holding the API token");
        app->add_option("--timeout", timeout, "request timeout in seconds");
        app->add_option("--max-retries", max_retries, "retries per request");
        app->add_option("--max-in-flight", max_in_flight, "concurrent requests");
        app->add_option("--similarity", similarity, "lexical | embedding");
        app->add_option("--embedding-model", embedding_model, "embedding model name");
        app->add_option("--embedding-url", embedding_url, "embeddings base URL (defaults to --base-url)");
    }

    bool has(const CLI::App* app, const std::string& name) const { return app->get_option(name)->count() > 0; }

    CampaignConfig resolve(const CLI::App* app) const {
        CampaignConfig c;
        if (!config.empty()) c = load_config(config);
        if (has(app, "--world")) c.world = world;
        if (has(app, "--tasks")) c.tasks = split_list(tasks);
        if (has(app, "--episodes")) c.episodes = episodes;
        if (has(app, "--max-revisions")) c.max_revisions = max_revisions;
        if (cot) c.cot = true;
        if (has(app, "--policy")) c.policy.type = policy;
        if (has(app, "--corruption-rate")) c.policy.corruption_rate = corruption_rate;
        if (has(app, "--transcript")) c.policy.transcript = transcript;
        if (has(app, "--seed")) c.seed = seed;
        if (has(app, "--parallel")) c.parallel = parallel;
        if (has(app, "--out") || config.empty()) c.out = out;
        if (record) c.record_transcripts = true;
        if (deterministic) c.deterministic_world = true;
        if (has(app, "--model")) c.policy.endpoint.model = model;
        if (has(app, "--base-url")) c.policy.endpoint.base_url = c.similarity.endpoint.base_url = base_url;
        if (has(app, "--api-key-env")) c.policy.endpoint.api_key_env = c.similarity.endpoint.api_key_env = api_key_env;
        if (has(app, "--timeout")) c.policy.endpoint.timeout_s = c.similarity.endpoint.timeout_s = timeout;
        if (has(app, "--max-retries")) c.policy.endpoint.max_retries = c.similarity.endpoint.max_retries = max_retries;
        if (has(app, "--max-in-flight"))
            c.policy.endpoint.max_in_flight = c.similarity.endpoint.max_in_flight = max_in_flight;
        if (has(app, "--similarity")) c.similarity.mode = similarity;
        if (has(app, "--embedding-model")) c.similarity.endpoint.model = embedding_model;
        if (has(app, "--embedding-url")) c.similarity.endpoint.base_url = embedding_url;
        return c;
    }
};

inline int unavailable_count(const CampaignResult& r) {
    int n = 0;
    for (const auto& t : r.tasks) n += t.policy_unavailable;
    return n;
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Exploration campaigns, dataset export and evaluation for a text crafting world"};
    app.require_subcommand(1);

    detail::CampaignFlags explore_flags, eval_flags;
    auto* explore = app.add_subcommand("explore", "run an exploration campaign and write trajectories");
    explore_flags.add(explore, "out");

    auto* evaluate = app.add_subcommand("evaluate", "run a test campaign and write the success table");
    eval_flags.add(evaluate, "eval_out");
    std::string report;
    evaluate->add_option("--report", report, "success table text file (a .csv is written alongside)")->required();

    auto* build = app.add_subcommand("build-dataset", "compile trajectories into a JSONL dataset");
    std::string traj_dir, ds_out;
    bool no_dedup = false;
    double split = -1;
    std::uint64_t split_seed = 0;
    build->add_option("--trajectories", traj_dir, "directory of trajectory files")->required();
    build->add_option("--out", ds_out, "dataset JSONL path")->required();
    build->add_flag("--no-dedup", no_dedup, "keep instances with identical text");
    build->add_option("--split", split, "also write .train.jsonl/.val.jsonl with this train fraction");
    build->add_option("--split-seed", split_seed, "shuffle seed for --split");

    auto* replay = app.add_subcommand("replay", "re-run a recorded episode and compare");
    std::string replay_file, replay_world;
    replay->add_option("--trajectory", replay_file, "trajectory JSON")->required();
    replay->add_option("--world", replay_world, "world config (defaults to the recorded path)");

    auto* gap = app.add_subcommand("gap-check", "print the requirement gap for a task");
    std::string gap_world = "worlds/plan4mc_default.json", gap_task, gap_inv, gap_surr, gap_reqs;
    gap->add_option("--world", gap_world, "world config JSON");
    gap->add_option("--task", gap_task, "task name or skill description")->required();
    gap->add_option("--inventory", gap_inv, "e.g. \"2.0 log; 3.0 dirt\"");
    gap->add_option("--surroundings", gap_surr, "e.g. \"1.0 cobblestone_nearby\"");
    gap->add_option("--requirements", gap_reqs, "override the requirements, e.g. \"8.0 cobblestone\"");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (explore->parsed() || evaluate->parsed()) {
            bool is_eval = evaluate->parsed();
            CampaignConfig c = (is_eval ? eval_flags : explore_flags).resolve(is_eval ? evaluate : explore);
            CampaignRun run = run_campaign_to_disk(c, !is_eval);
            std::string text = render_success_text(run.table);
            out << text;
            if (is_eval) {
                std::filesystem::path rp(report);
                if (rp.has_parent_path()) std::filesystem::create_directories(rp.parent_path());
                std::ofstream(rp, std::ios::binary) << text;
                std::filesystem::path csv = rp;
                csv.replace_extension(".csv");
                std::ofstream(csv, std::ios::binary) << render_success_csv(run.table);
            } else {
                out << run.trajectory_files.size() << " trajectories written to " << c.out << "/trajectories\n";
            }
            if (int n = detail::unavailable_count(run.result); n > 0) {
                err << "error: policy unavailable in " << n << " episode(s)\n";
                return kExitInfra;
            }
            return kExitOk;
        }
        if (build->parsed()) {
            if (!std::filesystem::is_directory(traj_dir)) throw ConfigError("not a directory: " + traj_dir);
            LoadedTrajectories loaded = load_trajectories(traj_dir);
            for (const auto& e : loaded.errors) err << "warning: skipped " << e.what() << "\n";
            if (loaded.trajectories.empty()) err << "warning: no trajectories found in " << traj_dir << "\n";
            auto ds = build_dataset(loaded.trajectories, {!no_dedup});
            write_dataset(ds, ds_out);
            DatasetSummary s = summarize(ds);
            std::ofstream(ds_out + ".summary.json", std::ios::binary) << summary_to_json(s).dump(2) << '\n';
            if (split >= 0) {
                auto [train, val] = shuffle_split(ds, split, split_seed);
                std::filesystem::path base(ds_out);
                base.replace_extension();
                write_dataset(train, base.string() + ".train.jsonl");
                write_dataset(val, base.string() + ".val.jsonl");
            }
            out << s.instances << " instances (" << s.relabeled << " relabeled) from " << loaded.trajectories.size()
                << " trajectories\n";
            for (const auto& [label, n] : s.per_label) out << "  " << label << ": " << n << "\n";
            return kExitOk;
        }
        if (replay->parsed()) {
            Trajectory t;
            try {
                t = load_trajectory(replay_file);
            } catch (const TrajectoryParseError& e) {
                throw ConfigError(e.what());
            }
            std::string wp = replay_world.empty() ? t.world_path : replay_world;
            WorldModel w;
            try {
                w = load_world(wp);
            } catch (const WorldError& e) {
                throw ConfigError(e.what());
            }
            if (t.deterministic_world) w = deterministic_world(std::move(w));
            LexicalSimilarity sim(w.synonyms);
            ReplayReport rep = replay_trajectory(t, w, sim);
            if (rep.clean()) {
                out << "replay clean: " << t.id << " (" << t.steps.size() << " steps)\n";
                return kExitOk;
            }
            out << "replay diverged: " << t.id << "\n";
            for (const auto& d : rep.differences) out << "  " << d << "\n";
            return kExitDivergence;
        }
        if (gap->parsed()) {
            WorldModel w;
            try {
                w = load_world(gap_world);
            } catch (const WorldError& e) {
                throw ConfigError(e.what());
            }
            std::vector<Requirement> reqs;
            std::string label = task_text(gap_task);
            if (gap->get_option("--requirements")->count() > 0) {
                reqs = parse_requirements(gap_reqs);
            } else if (const TaskDef* t = w.find_task(gap_task)) {
                reqs = t->requirements;
            } else if (const Skill* s = w.find_skill(label)) {
                reqs = s->preconditions;
            } else {
                throw ConfigError("unknown task or skill '" + gap_task + "'");
            }
            out << render_gap_report(compute_gaps(reqs, parse_container(gap_inv), parse_container(gap_surr)), label)
                << "\n";
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const WorldError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const PolicyUnavailable& e) {
        err << "error: " << e.what() << "\n";
        return kExitInfra;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInfra;
    }
    return kExitOk;
}

}  // namespace craftagent

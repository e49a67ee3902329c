#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "craftagent/explorer.hpp"

namespace craftagent {

// successes/episodes in hundredths, rounded half up; nullopt for zero episodes
inline std::optional<std::int64_t> rate_hundredths(std::int64_t successes, std::int64_t episodes) {
    if (episodes <= 0) return std::nullopt;
    return (200 * successes + episodes) / (2 * episodes);
}

inline std::string format_hundredths(std::optional<std::int64_t> h) {
    if (!h) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%02lld", static_cast<long long>(*h / 100), static_cast<long long>(*h % 100));
    return buf;
}

struct SuccessRow {
    std::string task;
    std::string family;
    int successes = 0;
    int episodes = 0;
    int policy_unavailable = 0;
    std::optional<std::int64_t> rate;  // hundredths
};

struct FamilyRow {
    std::string family;
    int tasks = 0;
    std::optional<std::int64_t> average;  // hundredths, mean of the task rates
    int achieved = 0;
};

struct SuccessTable {
    std::vector<SuccessRow> rows;
    std::vector<FamilyRow> families;  // in order of first appearance
    int achieved = 0;
};

inline SuccessTable success_table(const std::vector<TaskResult>& results) {
    SuccessTable t;
    for (const auto& r : results) {
        SuccessRow row{r.task, r.family, r.successes, r.episodes, r.policy_unavailable,
                       rate_hundredths(r.successes, r.episodes)};
        if (row.rate && *row.rate > 0) t.achieved++;
        auto fam = std::find_if(t.families.begin(), t.families.end(),
                                [&](const FamilyRow& f) { return f.family == r.family; });
        if (fam == t.families.end()) {
            t.families.push_back({r.family});
            fam = t.families.end() - 1;
        }
        fam->tasks++;
        if (row.rate && *row.rate > 0) fam->achieved++;
        t.rows.push_back(std::move(row));
    }
    for (auto& f : t.families) {
        // exact mean of per-task fractions, rounded once
        std::int64_t num = 0, den = 1;
        int counted = 0;
        std::vector<std::pair<std::int64_t, std::int64_t>> fr;
        for (const auto& r : t.rows)
            if (r.family == f.family && r.episodes > 0) fr.emplace_back(r.successes, r.episodes);
        for (const auto& [s, e] : fr) den = std::lcm(den, e);
        for (const auto& [s, e] : fr) {
            num += s * (den / e);
            counted++;
        }
        if (counted > 0) f.average = rate_hundredths(num, den * counted);
    }
    return t;
}

inline std::string render_success_text(const SuccessTable& t) {
    std::size_t w_task = 4, w_fam = 6;
    for (const auto& r : t.rows) {
        w_task = std::max(w_task, r.task.size());
        w_fam = std::max(w_fam, r.family.size());
    }
    auto pad = [](std::string s, std::size_t w) {
        s.resize(std::max(w, s.size()), ' ');
        return s;
    };
    auto lpad = [](const std::string& s, std::size_t w) { return std::string(w > s.size() ? w - s.size() : 0, ' ') + s; };
    std::string out = pad("task", w_task) + "  " + pad("family", w_fam) + "  " + lpad("success", 7) + "  " +
                      lpad("episodes", 8) + "  " + lpad("rate", 4) + "\n";
    for (const auto& r : t.rows) {
        out += pad(r.task, w_task) + "  " + pad(r.family, w_fam) + "  " + lpad(std::to_string(r.successes), 7) + "  " +
               lpad(std::to_string(r.episodes), 8) + "  " + lpad(format_hundredths(r.rate), 4);
        if (r.policy_unavailable > 0) out += "  (" + std::to_string(r.policy_unavailable) + " policy unavailable)";
        out += "\n";
    }
    out += "\n";
    for (const auto& f : t.families)
        out += "average " + pad(f.family, w_fam) + "  " + lpad(format_hundredths(f.average), 4) + "  achieved " +
               std::to_string(f.achieved) + "/" + std::to_string(f.tasks) + "\n";
    out += "achieved tasks: " + std::to_string(t.achieved) + "/" + std::to_string(t.rows.size()) + "\n";
    return out;
}

inline std::string render_success_csv(const SuccessTable& t) {
    std::string out = "task,family,successes,episodes,policy_unavailable,rate\n";
    for (const auto& r : t.rows)
        out += r.task + "," + r.family + "," + std::to_string(r.successes) + "," + std::to_string(r.episodes) + "," +
               std::to_string(r.policy_unavailable) + "," + format_hundredths(r.rate) + "\n";
    for (const auto& f : t.families)
        out += "average_" + f.family + "," + f.family + ",,,," + format_hundredths(f.average) + "\n";
    return out;
}

}  // namespace craftagent

#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "craftagent/simulator.hpp"
#include "craftagent/world.hpp"

namespace craftagent {

inline constexpr std::string_view kDecisionTemplate =
    "Your goal is to complete a task in Minecraft.\n"
    "Given your current inventory, surroundings and skills you have already executed before, provide the "
    "skill you should execute next.\n"
    "The skill name should be no more than 5 words, in the form of a verb plus a noun.\n"
    "The verb should be one of the following: harvest, craft, find, get, place, mine.\n"
    "Please provide your output in the following format:\n"
    "Next skill: skill name\n"
    "\n"
    "Now the information:\n"
    "Task: {{task}}\n"
    "Inventory: {{inventory}}\n"
    "Surroundings: {{surrounding}}\n"
    "Last three skills you have just already executed: {{past skills}}\n"
    "Recipe: The requirements to {{task}} in Minecraft is: {{requirement}}\n"
    "Your output:";

inline constexpr std::string_view kRevisionBlock =
    "{{draft line}}\n"
    "OK, according to your output, your next skill is: {{retrieved skill}}\n"
    "But the skill failed.\n"
    "Please find out the reason why the skill failed, and make a revision.\n"
    "Here's your inventory: {{inventory}}\n"
    "Here's your surroundings: {{surrounding}}\n"
    "Here's the feedback from the environment: Your inventory or surroundings does not meet the requirements "
    "to perform the skill {{retrieved skill}}\n"
    "Speculated reason: {{feedback information}}\n"
    "Based on the information, please output the next skill you need to do.\n"
    "Revised skill:";

inline constexpr std::string_view kMalformedBlock =
    "{{draft line}}\n"
    "Here's the feedback from the environment: output could not be parsed into a skill\n"
    "Based on the information, please output the next skill you need to do.\n"
    "Revised skill:";

inline constexpr std::string_view kCotTemplate =
    "Given requirements to achieve a task in Minecraft, answer which requirements are not met yet according "
    "to the inventory and surroundings.\n"
    "Think step by step and object by object. Note that objects ending with '_nearby' are required to be in "
    "the surroundings while other objects are required to be in the inventory. Here's an example:\n"
    "\n"
    "Task: craft furnace\n"
    "The requirements to craft furnace in Minecraft is: 8.0 cobblestone; 1.0 crafting_table_nearby\n"
    "Objects and their quantities in the inventory: 2.0 log; 3.0 dirt; 4.0 cobblestone\n"
    "Objects and their quantities in the surroundings: 1.0 cobblestone_nearby\n"
    "Which requirements are not met yet?\n"
    "Your output:\n"
    "cobblestone: need 8 in the inventory; already have 4; still require 4\n"
    "crafting_table_nearby: need 1 in the surroundings; already have none; still require 1\n"
    "Therefore, these requirements are not met yet: 4 cobblestones; 1 crafting_table_nearby\n"
    "\n"
    "Here's another example:\n"
    "\n"
    "Task: craft furnace\n"
    "The requirements to craft furnace in Minecraft is: 8.0 cobblestone; 1.0 crafting_table_nearby\n"
    "Objects and their quantities in the inventory: 2.0 log; 3.0 dirt; 11.0 cobblestone\n"
    "Objects and their quantities in the surroundings: 1.0 crafting_table_nearby\n"
    "Which requirements are not met yet?\n"
    "Your output:\n"
    "cobblestone: need 8 in the inventory; already have 11; still require 0\n"
    "crafting_table_nearby: need 1 in the surroundings; already have 1; still require 0\n"
    "Therefore, all requirements are met, so one can craft furnace directly.\n"
    "\n"
    "Now is your turn:\n"
    "\n"
    "Task: {{task}}\n"
    "The requirements to {{task}} in Minecraft is: {{requirement}}\n"
    "Objects and their quantities in the inventory: {{inventory}}\n"
    "Objects and their quantities in the surroundings: {{surrounding}}\n"
    "Which requirements are not met yet?\n"
    "Your output:\n"
    "...\n"
    "Based on your above analysis, to achieve the task, your next step should be?\n"
    "...\n"
    "Then please provide a skill name according to the next step.\n"
    "The skill name should be no more than 5 words, in the form of a verb plus a noun.\n"
    "The verb should be one of the following: harvest, craft, find, get, place, mine.\n"
    "Please provide your output in the following format:\n"
    "Next skill: skill name";

inline constexpr std::string_view kDatasetInputTemplate =
    "Your goal is to complete a task in Minecraft.\n"
    "Given your current inventory, surroundings, and skills you have already executed before, provide the "
    "skill you should execute next.\n"
    "Now the information:\n"
    "\n"
    "Task: {{task}}\n"
    "Inventory: {{inventory}}\n"
    "Surroundings: {{surrounding}}\n"
    "Last three skills you have just already executed: {{past skills}}\n"
    "Recipe: The requirements to {{task}} in Minecraft is: {{requirement}}\n"
    "Your output:";

inline constexpr std::string_view kDatasetOutputTemplate = "Next skill: {{skill name}}";

enum class PromptKind { decision, revision, cot, dataset_input, dataset_output };

using Slots = std::map<std::string, std::string>;

struct PromptBundle {
    PromptKind kind = PromptKind::decision;
    std::string text;
    Slots slots;
};

// Single pass: substituted values are never rescanned for markers.
inline std::string fill_template(std::string_view tpl, const Slots& slots) {
    std::string out;
    std::size_t i = 0;
    while (i < tpl.size()) {
        auto open = tpl.find("{{", i);
        if (open == std::string_view::npos) {
            out.append(tpl.substr(i));
            break;
        }
        auto close = tpl.find("}}", open);
        if (close == std::string_view::npos) throw std::logic_error("unterminated template marker");
        out.append(tpl.substr(i, open - i));
        std::string key(tpl.substr(open + 2, close - open - 2));
        auto it = slots.find(key);
        if (it == slots.end()) throw std::logic_error("template slot '" + key + "' has no value");
        out += it->second;
        i = close + 2;
    }
    return out;
}

inline std::string render_requirements(const std::vector<Requirement>& reqs) {
    std::string out;
    for (const auto& r : reqs) {
        if (!out.empty()) out += "; ";
        out += r.quantity.one_decimal() + " " + r.item;
    }
    return out.empty() ? "nothing" : out;
}

inline std::string render_history(const std::vector<std::string>& history) {
    if (history.size() > 3) throw std::invalid_argument("history holds at most three skills");
    std::string out;
    for (const auto& h : history) {
        if (!out.empty()) out += "; ";
        out += h;
    }
    return out.empty() ? "none" : out;
}

inline PromptBundle render_decision(const std::string& task, const std::string& inventory_text,
                                    const std::string& surroundings_text, const std::vector<std::string>& history,
                                    const std::string& requirements_text) {
    PromptBundle b;
    b.kind = PromptKind::decision;
    b.slots = {{"task", task},
               {"inventory", inventory_text},
               {"surrounding", surroundings_text},
               {"past skills", render_history(history)},
               {"requirement", requirements_text}};
    b.text = fill_template(kDecisionTemplate, b.slots);
    return b;
}

inline std::string speculated_reason(const Feedback& fb) {
    std::string out;
    const std::string& skill = fb.attempted_skill;
    for (const auto& d : fb.deficits) {
        if (!out.empty()) out += " ";
        const std::string& item = d.requirement.item;
        if (is_nearby(item)) {
            std::string base = item.substr(0, item.size() - std::string_view("_nearby").size());
            out += skill + " requires " + base + " nearby but it is not in your surroundings. You should get " + base +
                   " nearby first.";
        } else {
            out += skill + " need to consume " + (d.missing + d.have).compact() + " " + item +
                   " but not enough now. You should get enough " + item + " to " + skill + ".";
        }
    }
    return out;
}

namespace detail {

// The prior prompt ends in an answer cue ("Your output:" / "Revised skill:"); the draft fills it.
inline std::string draft_line(const std::string& prior, const std::string& draft) {
    auto ends_with = [&](std::string_view s) {
        return prior.size() >= s.size() && prior.compare(prior.size() - s.size(), s.size(), s) == 0;
    };
    std::string tail = draft.empty() ? "" : " " + draft;
    if (ends_with("Your output:") || ends_with("Revised skill:")) return tail;
    return "\nYour output:" + tail;
}

inline PromptBundle revision_bundle(std::string_view block, Slots slots, const PromptBundle& prior,
                                    const std::string& draft) {
    PromptBundle b;
    b.kind = PromptKind::revision;
    slots["draft skill"] = draft;
    slots["draft line"] = "";
    std::string block_text = fill_template(block, slots);
    b.text = prior.text + draft_line(prior.text, draft) + block_text;
    slots["prior"] = prior.text;
    slots.erase("draft line");
    b.slots = std::move(slots);
    return b;
}

}  // namespace detail

inline PromptBundle render_revision(const PromptBundle& prior, const std::string& draft_text,
                                    const std::string& retrieved_skill, const std::string& inventory_text,
                                    const std::string& surroundings_text, const Feedback& feedback) {
    if (feedback.deficits.empty()) throw std::invalid_argument("revision requires a non-empty feedback");
    Slots slots = {{"retrieved skill", retrieved_skill},
                   {"inventory", inventory_text},
                   {"surrounding", surroundings_text},
                   {"feedback information", speculated_reason(feedback)}};
    return detail::revision_bundle(kRevisionBlock, std::move(slots), prior, draft_text);
}

inline PromptBundle render_malformed_revision(const PromptBundle& prior, const std::string& draft_text) {
    return detail::revision_bundle(kMalformedBlock, {}, prior, draft_text);
}

struct GapLine {
    std::string item;
    Quantity need;
    Quantity have;
    Quantity still_require;
    bool operator==(const GapLine&) const = default;
};

struct GapReport {
    std::vector<GapLine> lines;
    bool all_met = true;
};

inline GapReport compute_gaps(const std::vector<Requirement>& reqs, const Container& inventory,
                              const Container& surroundings) {
    GapReport g;
    for (const auto& r : reqs) {
        Quantity have = is_nearby(r.item) ? surroundings.get(r.item) : inventory.get(r.item);
        Quantity still = have < r.quantity ? r.quantity - have : Quantity(0);
        if (still.positive()) g.all_met = false;
        g.lines.push_back({r.item, r.quantity, have, still});
    }
    return g;
}

inline std::string render_gap_report(const GapReport& g, const std::string& task_text) {
    std::string out;
    std::string missing;
    for (const auto& l : g.lines) {
        bool near = is_nearby(l.item);
        out += l.item + ": need " + l.need.compact() + (near ? " in the surroundings" : " in the inventory") +
               "; already have " + (l.have.positive() ? l.have.compact() : std::string("none")) + "; still require " +
               l.still_require.compact() + "\n";
        if (l.still_require.positive()) {
            if (!missing.empty()) missing += "; ";
            std::string noun = l.item;
            if (!near && Quantity(1) < l.still_require && noun.back() != 's') noun += "s";
            missing += l.still_require.compact() + " " + noun;
        }
    }
    if (g.all_met)
        out += "Therefore, all requirements are met, so one can " + task_text + " directly.";
    else
        out += "Therefore, these requirements are not met yet: " + missing;
    return out;
}

inline PromptBundle render_cot(const std::string& task, const std::string& requirements_text,
                               const std::string& inventory_text, const std::string& surroundings_text) {
    PromptBundle b;
    b.kind = PromptKind::cot;
    b.slots = {{"task", task},
               {"requirement", requirements_text},
               {"inventory", inventory_text},
               {"surrounding", surroundings_text}};
    b.text = fill_template(kCotTemplate, b.slots);
    return b;
}

inline std::pair<std::string, std::string> render_dataset_pair(const std::string& task_label,
                                                               const std::string& inventory_text,
                                                               const std::string& surroundings_text,
                                                               const std::vector<std::string>& history,
                                                               const std::string& requirements_text,
                                                               const std::string& skill_name) {
    Slots in = {{"task", task_label},
                {"inventory", inventory_text},
                {"surrounding", surroundings_text},
                {"past skills", render_history(history)},
                {"requirement", requirements_text}};
    return {fill_template(kDatasetInputTemplate, in), fill_template(kDatasetOutputTemplate, {{"skill name", skill_name}})};
}

// Re-render a bundle from its retained slots.
inline std::string rerender(const PromptBundle& b) {
    switch (b.kind) {
        case PromptKind::decision: return fill_template(kDecisionTemplate, b.slots);
        case PromptKind::cot: return fill_template(kCotTemplate, b.slots);
        case PromptKind::revision: {
            PromptBundle prior;
            prior.text = b.slots.at("prior");
            Slots s = b.slots;
            s.erase("prior");
            bool malformed = !s.count("retrieved skill");
            std::string draft = s.at("draft skill");
            return detail::revision_bundle(malformed ? kMalformedBlock : kRevisionBlock, s, prior, draft).text;
        }
        case PromptKind::dataset_input: return fill_template(kDatasetInputTemplate, b.slots);
        case PromptKind::dataset_output: return fill_template(kDatasetOutputTemplate, b.slots);
    }
    return {};
}

}  // namespace craftagent

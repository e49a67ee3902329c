#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "craftagent/world.hpp"

namespace craftagent {

struct MalformedOutput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParsedAction {
    std::string verb;  // allowed verb or "unknown"
    std::vector<std::string> noun_phrase;
    std::string text;  // the extracted, normalized skill text
    std::string raw;
};

inline std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline std::string join_words(const std::vector<std::string>& w) {
    std::string out;
    for (const auto& x : w) {
        if (!out.empty()) out += " ";
        out += x;
    }
    return out;
}

inline ParsedAction parse_output(const std::string& raw) {
    constexpr std::string_view marker = "Next skill:";
    std::string_view body = raw;
    if (auto pos = body.rfind(marker); pos != std::string_view::npos) body = body.substr(pos + marker.size());
    // only the first non-blank line is the skill
    std::string_view line;
    while (!body.empty()) {
        auto nl = body.find('\n');
        line = body.substr(0, nl);
        if (line.find_first_not_of(" \t\r") != std::string_view::npos) break;
        line = {};
        if (nl == std::string_view::npos) break;
        body = body.substr(nl + 1);
    }
    auto words = split_words(line);
    if (words.empty()) throw MalformedOutput("output could not be parsed into a skill");
    ParsedAction p;
    p.raw = raw;
    p.text = join_words(words);
    p.verb = is_allowed_verb(words[0]) ? words[0] : "unknown";
    p.noun_phrase.assign(words.begin() + 1, words.end());
    return p;
}

using SynonymMap = std::map<std::string, std::string>;

// alias -> canonical words ("workbench" -> crafting table)
inline std::vector<std::string> normalize_token(const std::string& tok, const SynonymMap& syn) {
    auto it = syn.find(tok);
    if (it == syn.end()) return {tok};
    return split_words(it->second);
}

inline std::string normalize_text(std::string_view s, const SynonymMap& syn) {
    std::vector<std::string> out;
    for (const auto& w : split_words(s))
        for (auto& n : normalize_token(w, syn)) out.push_back(std::move(n));
    return join_words(out);
}

namespace detail {

template <class T>
double dice(const std::multiset<T>& a, const std::multiset<T>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::vector<T> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    return 2.0 * static_cast<double>(common.size()) / static_cast<double>(a.size() + b.size());
}

inline std::multiset<std::string> trigrams(const std::string& s) {
    std::multiset<std::string> g;
    if (s.empty()) return g;
    if (s.size() < 3) {
        g.insert(s);
        return g;
    }
    for (std::size_t i = 0; i + 3 <= s.size(); ++i) g.insert(s.substr(i, 3));
    return g;
}

}  // namespace detail

inline double lexical_similarity(std::string_view a, std::string_view b, const SynonymMap& syn = {}) {
    std::string na = normalize_text(a, syn), nb = normalize_text(b, syn);
    auto wa = split_words(na), wb = split_words(nb);
    std::set<std::string> sa(wa.begin(), wa.end()), sb(wb.begin(), wb.end());
    std::multiset<std::string> ma(sa.begin(), sa.end()), mb(sb.begin(), sb.end());
    return 0.5 * detail::dice(ma, mb) + 0.5 * detail::dice(detail::trigrams(na), detail::trigrams(nb));
}

class SimilarityProvider {
public:
    virtual ~SimilarityProvider() = default;
    virtual double score(const std::string& a, const std::string& b) const = 0;
    // Batch form lets remote providers embed the catalog once.
    virtual std::vector<double> score_many(const std::string& a, const std::vector<std::string>& bs) const {
        std::vector<double> out;
        out.reserve(bs.size());
        for (const auto& b : bs) out.push_back(score(a, b));
        return out;
    }
};

class LexicalSimilarity : public SimilarityProvider {
public:
    explicit LexicalSimilarity(SynonymMap syn = {}) : syn_(std::move(syn)) {}
    double score(const std::string& a, const std::string& b) const override { return lexical_similarity(a, b, syn_); }

private:
    SynonymMap syn_;
};

inline const std::set<std::string>& retrieval_stopwords() {
    static const std::set<std::string> s = {"nearby", "a", "an", "the", "some"};
    return s;
}

class Retriever {
public:
    Retriever(std::vector<std::string> catalog, SynonymMap syn) : catalog_(std::move(catalog)), syn_(std::move(syn)) {
        if (catalog_.empty()) throw std::invalid_argument("empty skill catalog");
        for (const auto& d : catalog_) {
            auto words = split_words(d);
            std::set<std::string> nouns;
            for (std::size_t i = 1; i < words.size(); ++i)
                for (auto& n : normalize_token(words[i], syn_))
                    if (!retrieval_stopwords().count(n)) nouns.insert(n);
            vocab_.insert(nouns.begin(), nouns.end());
            nouns_.push_back(std::move(nouns));
        }
    }

    std::set<std::string> normalize_nouns(const std::vector<std::string>& phrase) const {
        std::set<std::string> out;
        for (const auto& w : phrase) {
            std::vector<std::string> toks = normalize_token(w, syn_);
            if (toks.size() == 1 && toks[0] == w && w.size() > 1 && w.back() == 's' && syn_.count(w.substr(0, w.size() - 1)))
                toks = normalize_token(w.substr(0, w.size() - 1), syn_);
            for (auto& t : toks) {
                if (!vocab_.count(t) && t.size() > 1 && t.back() == 's' && vocab_.count(t.substr(0, t.size() - 1)))
                    t.pop_back();
                if (!retrieval_stopwords().count(t)) out.insert(t);
            }
        }
        return out;
    }

    // indices of catalog entries sharing a normalized noun with the output
    std::vector<std::size_t> candidates(const ParsedAction& p) const {
        auto nouns = normalize_nouns(p.noun_phrase);
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < catalog_.size(); ++i)
            for (const auto& n : nouns_[i])
                if (nouns.count(n)) {
                    out.push_back(i);
                    break;
                }
        return out;
    }

    const std::string& retrieve(const ParsedAction& p, const SimilarityProvider& sim) const {
        auto pool = candidates(p);
        if (pool.empty())
            for (std::size_t i = 0; i < catalog_.size(); ++i) pool.push_back(i);
        if (pool.size() == 1) return catalog_[pool[0]];
        std::vector<std::string> descs;
        for (auto i : pool) descs.push_back(catalog_[i]);
        auto scores = sim.score_many(p.text, descs);
        std::size_t best = 0;
        for (std::size_t k = 1; k < pool.size(); ++k) {
            if (scores[k] > scores[best] || (scores[k] == scores[best] && descs[k] < descs[best])) best = k;
        }
        return catalog_[pool[best]];
    }

    const std::vector<std::string>& catalog() const { return catalog_; }

private:
    std::vector<std::string> catalog_;
    SynonymMap syn_;
    std::vector<std::set<std::string>> nouns_;
    std::set<std::string> vocab_;
};

inline Retriever make_retriever(const WorldModel& w) {
    std::vector<std::string> catalog;
    for (const auto& s : w.skills) catalog.push_back(s.description);
    return Retriever(std::move(catalog), w.synonyms);
}

inline const Skill& retrieve(const ParsedAction& parsed, const WorldModel& w, const SimilarityProvider& sim) {
    return *w.find_skill(make_retriever(w).retrieve(parsed, sim));
}

}  // namespace craftagent

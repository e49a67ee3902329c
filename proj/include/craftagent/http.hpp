#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"

#include "craftagent/policy.hpp"
#include "craftagent/retrieval.hpp"

namespace craftagent {

struct EndpointConfig {
    std::string base_url = "http://127.0.0.1:8000/v1";
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_s = 60.0;
    int max_retries = 3;
    int max_in_flight = 4;
    int backoff_ms = 500;  // doubled after every failed attempt
    double temperature = 0.0;
};

inline Json endpoint_to_json(const EndpointConfig& c) {
    return Json{{"base_url", c.base_url},   {"model", c.model},           {"api_key_env", c.api_key_env},
                {"timeout_s", c.timeout_s}, {"max_retries", c.max_retries}, {"max_in_flight", c.max_in_flight},
                {"backoff_ms", c.backoff_ms}, {"temperature", c.temperature}};
}

inline EndpointConfig endpoint_from_json(const Json& j) {
    EndpointConfig c;
    c.base_url = j.value("base_url", c.base_url);
    c.model = j.value("model", c.model);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.backoff_ms = j.value("backoff_ms", c.backoff_ms);
    c.temperature = j.value("temperature", c.temperature);
    return c;
}

namespace detail {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing slash
};

inline SplitUrl split_url(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw std::invalid_argument("endpoint URL needs a scheme: " + url);
    auto slash = url.find('/', scheme + 3);
    SplitUrl s{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
    while (!s.prefix.empty() && s.prefix.back() == '/') s.prefix.pop_back();
    return s;
}

// POST with retries; 429, 5xx and transport errors are retried, other statuses are final.
class JsonPoster {
public:
    explicit JsonPoster(EndpointConfig cfg)
        : cfg_(std::move(cfg)), url_(split_url(cfg_.base_url)), slots_(std::max(1, cfg_.max_in_flight)) {
        if (const char* k = std::getenv(cfg_.api_key_env.c_str())) token_ = k;
    }

    Json post(const std::string& path, const Json& body, int* attempts_out = nullptr) {
        std::string payload = body.dump();
        std::string last_error;
        int attempts = 0;
        for (int i = 0; i <= cfg_.max_retries; ++i) {
            if (i > 0) std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(cfg_.backoff_ms) << (i - 1)));
            ++attempts;
            if (attempts_out) *attempts_out = attempts;
            slots_.acquire();
            httplib::Result res = send(path, payload);
            slots_.release();
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) throw PolicyUnavailable("endpoint returned HTTP " + std::to_string(res->status));
            try {
                return Json::parse(res->body);
            } catch (const std::exception& e) {
                last_error = std::string("bad JSON from endpoint: ") + e.what();
            }
        }
        throw PolicyUnavailable("endpoint " + cfg_.base_url + path + " failed after " + std::to_string(attempts) +
                                " attempts: " + last_error);
    }

    const EndpointConfig& config() const { return cfg_; }

private:
    httplib::Result send(const std::string& path, const std::string& payload) {
        httplib::Client cli(url_.origin);
        auto us = static_cast<long long>(cfg_.timeout_s * 1e6);
        time_t sec = static_cast<time_t>(us / 1000000), usec = static_cast<time_t>(us % 1000000);
        cli.set_connection_timeout(sec, usec);
        cli.set_read_timeout(sec, usec);
        cli.set_write_timeout(sec, usec);
        httplib::Headers h;
        if (!token_.empty()) h.emplace("Authorization", "Bearer " + token_);
        return cli.Post(url_.prefix + path, h, payload, "application/json");
    }

    EndpointConfig cfg_;
    SplitUrl url_;
    std::string token_;
    std::counting_semaphore<1024> slots_;
};

}  // namespace detail

// Chat-completions policy: the prompt goes out as a single user message.
class LlmPolicy : public Policy {
public:
    explicit LlmPolicy(EndpointConfig cfg) : poster_(std::make_unique<detail::JsonPoster>(std::move(cfg))) {}

    PolicyResponse query(const PolicyQuery& q, const PolicyContext&) override {
        const auto& c = poster_->config();
        Json body = {{"model", c.model},
                     {"temperature", c.temperature},
                     {"messages", Json::array({Json{{"role", "user"}, {"content", q.prompt.text}}})}};
        auto t0 = std::chrono::steady_clock::now();
        Json r = poster_->post("/chat/completions", body);
        std::string text;
        try {
            text = r.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const std::exception& e) {
            throw PolicyUnavailable(std::string("chat response without content: ") + e.what());
        }
        auto dt = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
        return {text, dt, tag()};
    }
    std::string tag() const override { return "llm:" + poster_->config().model; }

private:
    std::unique_ptr<detail::JsonPoster> poster_;
};

// Cosine similarity of endpoint embeddings, clamped to [0, 1]. Vectors are cached per text.
class EmbeddingSimilarity : public SimilarityProvider {
public:
    explicit EmbeddingSimilarity(EndpointConfig cfg) : poster_(std::make_unique<detail::JsonPoster>(std::move(cfg))) {}

    double score(const std::string& a, const std::string& b) const override {
        return score_many(a, {b}).front();
    }

    std::vector<double> score_many(const std::string& a, const std::vector<std::string>& bs) const override {
        std::vector<std::string> want{a};
        want.insert(want.end(), bs.begin(), bs.end());
        embed(want);
        std::lock_guard<std::mutex> lk(mu_);
        const auto& va = cache_.at(a);
        std::vector<double> out;
        for (const auto& b : bs) out.push_back(a == b ? 1.0 : cosine(va, cache_.at(b)));
        return out;
    }

    static double cosine(const std::vector<double>& x, const std::vector<double>& y) {
        if (x.size() != y.size()) throw PolicyUnavailable("embedding dimensions differ");
        double dot = 0, nx = 0, ny = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            dot += x[i] * y[i];
            nx += x[i] * x[i];
            ny += y[i] * y[i];
        }
        if (nx == 0 || ny == 0) return 0.0;
        return std::clamp(dot / (std::sqrt(nx) * std::sqrt(ny)), 0.0, 1.0);
    }

private:
    void embed(const std::vector<std::string>& texts) const {
        std::vector<std::string> missing;
        {
            std::lock_guard<std::mutex> lk(mu_);
            for (const auto& t : texts)
                if (!cache_.count(t) && std::find(missing.begin(), missing.end(), t) == missing.end()) missing.push_back(t);
        }
        if (missing.empty()) return;
        Json r = poster_->post("/embeddings", Json{{"model", poster_->config().model}, {"input", missing}});
        std::map<std::string, std::vector<double>> got;
        try {
            const Json& data = r.at("data");
            if (data.size() != missing.size()) throw std::runtime_error("embedding count mismatch");
            for (const auto& d : data) {
                std::size_t idx = d.value("index", static_cast<std::size_t>(got.size()));
                got[missing.at(idx)] = d.at("embedding").get<std::vector<double>>();
            }
        } catch (const PolicyUnavailable&) {
            throw;
        } catch (const std::exception& e) {
            throw PolicyUnavailable(std::string("bad embeddings response: ") + e.what());
        }
        std::lock_guard<std::mutex> lk(mu_);
        for (auto& [k, v] : got) cache_.emplace(k, std::move(v));
    }

    std::unique_ptr<detail::JsonPoster> poster_;
    mutable std::mutex mu_;
    mutable std::map<std::string, std::vector<double>> cache_;
};

}  // namespace craftagent

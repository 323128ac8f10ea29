#include "zplke/remote_lm.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include <httplib.h>

#include "zplke/errors.hpp"

namespace zplke {

using json = nlohmann::json;

RemoteBackend::RemoteBackend(Config config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ConfigError("remote backend needs a base URL");
    if (config_.model.empty()) throw ConfigError("remote backend needs a model identifier");
    if (config_.max_attempts < 1) throw ConfigError("retry budget must be >= 1");
}

std::string RemoteBackend::post_json(const std::string& body) const {
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_seconds);
        client.set_read_timeout(config_.timeout_seconds);
        httplib::Headers headers;
        if (!config_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        auto res = client.Post(config_.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw ProtocolError("backend returned HTTP " + std::to_string(res->status) + ": " +
                                res->body);
        return res->body;
    }
    throw BackendError(last_error, config_.max_attempts);
}

namespace {

struct EchoLogprobs {
    std::vector<std::string> tokens;
    std::vector<double> logprobs;       // entry may be NaN for the first token
    std::vector<std::size_t> offsets;
};

EchoLogprobs parse_logprobs(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("invalid JSON from backend: ") + e.what());
    }
    if (!j.contains("choices") || j["choices"].empty())
        throw ProtocolError("response carries no choices");
    const auto& lp = j["choices"][0];
    if (!lp.contains("logprobs") || lp["logprobs"].is_null())
        throw ProtocolError("response carries no logprobs");
    const auto& l = lp["logprobs"];
    EchoLogprobs out;
    for (const auto& t : l.at("tokens")) out.tokens.push_back(t.get<std::string>());
    for (const auto& v : l.at("token_logprobs"))
        out.logprobs.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                           : v.get<double>());
    for (const auto& o : l.at("text_offset")) out.offsets.push_back(o.get<std::size_t>());
    if (out.tokens.size() != out.logprobs.size() || out.tokens.size() != out.offsets.size())
        throw ProtocolError("tokens/token_logprobs/text_offset lengths disagree");
    return out;
}

}  // namespace

std::vector<TokenScore> RemoteBackend::score_continuation(const std::string& context,
                                                          const std::string& continuation) const {
    if (continuation.empty()) throw ValidationError("continuation is empty");
    const std::string full = context + continuation;
    json req{{"model", config_.model}, {"prompt", full},      {"max_tokens", 0},
             {"temperature", 0},       {"echo", true},        {"logprobs", 1}};
    const auto echo = parse_logprobs(post_json(req.dump()));

    std::vector<TokenScore> out;
    for (std::size_t i = 0; i < echo.tokens.size(); ++i) {
        const std::size_t start = echo.offsets[i];
        if (start < context.size()) continue;
        TokenScore t;
        t.token_text = echo.tokens[i];
        t.logprob = echo.logprobs[i];
        t.char_offset = start - context.size();
        if (std::isnan(t.logprob))
            throw ProtocolError("missing logprob inside the continuation");
        out.push_back(std::move(t));
    }
    // The continuation must begin exactly at a token boundary and be covered
    // end to end; anything else is a tokenizer/offset misalignment.
    std::string rebuilt;
    for (const auto& t : out) rebuilt += t.token_text;
    if (rebuilt != continuation)
        throw ProtocolError("continuation tokens reconstruct '" + rebuilt + "', expected '" +
                            continuation + "'");
    if (out.empty()) throw ProtocolError("no tokens fell inside the continuation");
    return out;
}

std::vector<std::string> RemoteBackend::generate_greedy(const std::string& context,
                                                        std::size_t k) const {
    if (k == 0) throw ValidationError("k must be >= 1");
    json req{{"model", config_.model},
             {"prompt", context},
             {"max_tokens", k},
             {"temperature", 0},
             {"echo", false},
             {"logprobs", 1}};
    const auto echo = parse_logprobs(post_json(req.dump()));
    if (echo.tokens.empty()) throw ProtocolError("backend generated no tokens");
    return echo.tokens;
}

}  // namespace zplke

#pragma once

#include <string>

#include "zplke/scoring.hpp"

namespace zplke {

// Client for a completions-compatible HTTP backend with echo logprobs.
// Scoring sends {model, prompt: context+continuation, max_tokens: 0,
// temperature: 0, echo: true, logprobs: 1} and slices the returned
// tokens/token_logprobs/text_offset arrays at the context/continuation
// boundary. No sampling parameters are ever sent for scoring.
class RemoteBackend : public ScoringBackend {
public:
    struct Config {
        std::string base_url;            // e.g. http://localhost:8000
        std::string path = "/v1/completions";
        std::string model;               // model identifier sent on the wire
        std::string api_key;             // optional bearer token
        int timeout_seconds = 60;
        int max_attempts = 3;            // retry budget for transport failures
    };

    explicit RemoteBackend(Config config);

    std::string model_id() const override { return config_.model; }
    BackendKind kind() const override { return BackendKind::remote; }

    std::vector<TokenScore> score_continuation(const std::string& context,
                                               const std::string& continuation) const override;
    std::vector<std::string> generate_greedy(const std::string& context,
                                             std::size_t k) const override;

private:
    std::string post_json(const std::string& body) const;

    Config config_;
};

}  // namespace zplke

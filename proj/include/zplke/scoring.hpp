#pragma once

#include <memory>
#include <string>
#include <vector>

#include "zplke/prompt.hpp"

namespace zplke {

enum class BackendKind { remote, mock };

struct ModelId {
    std::string identifier;  // theta
    BackendKind kind = BackendKind::mock;
};

// One continuation token with its conditional log-probability. char_offset
// indexes into the scored continuation string; concatenating token_texts in
// order reproduces the continuation exactly.
struct TokenScore {
    std::string token_text;
    double logprob = 0.0;  // natural log, <= 0
    std::size_t char_offset = 0;
};

// Per-candidate score for one multiple-choice object.
struct ChoiceScore {
    std::string object;
    std::vector<TokenScore> token_scores;
    double joint_logprob = 0.0;
    double normalized_prob = 0.0;  // filled by the evaluator over all M+1 choices
};

// Token-probability backend contract shared by the mock oracle and the
// remote completions client. Implementations are safe for concurrent calls.
class ScoringBackend {
public:
    virtual ~ScoringBackend() = default;

    virtual std::string model_id() const = 0;
    virtual BackendKind kind() const = 0;

    // Conditional log-probabilities of each continuation token given the
    // context plus all preceding continuation tokens. Tokenization is
    // backend-authoritative. Throws ValidationError on empty continuation,
    // BackendError on transport failure, ProtocolError on token/offset
    // misalignment.
    virtual std::vector<TokenScore> score_continuation(const std::string& context,
                                                       const std::string& continuation) const = 0;

    // Greedy (temperature 0) decode of exactly k tokens. Backends without
    // generation support throw CapabilityError.
    virtual std::vector<std::string> generate_greedy(const std::string& context,
                                                     std::size_t k) const = 0;
};

// Joint log-probability of a continuation: the sum of token log-probs (the
// log of the token-probability product).
double object_probability(const std::vector<TokenScore>& scores);

// Length-normalized variant: joint divided by token count.
double object_probability_per_token(const std::vector<TokenScore>& scores);

struct PositionProbability {
    std::size_t position = 0;       // in-context pair index
    double joint_logprob = 0.0;     // object tokens given everything before them
    double mean_token_logprob = 0.0;
    std::size_t token_count = 0;
};

// For each in-context pair, the conditional probability of its object given
// the full prefix of the sequence. The object continuation is scored as
// separator + object (the token carrying the leading separator belongs to the
// object). Depends only on the prefix, so values are invariant to anything
// after the pair.
std::vector<PositionProbability> per_position_object_probabilities(const ScoringBackend& backend,
                                                                   const PromptSequence& seq);

}  // namespace zplke

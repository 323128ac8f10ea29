#include "zplke/scoring.hpp"

#include "zplke/errors.hpp"

namespace zplke {

double object_probability(const std::vector<TokenScore>& scores) {
    if (scores.empty()) throw ValidationError("object_probability over zero tokens is undefined");
    double sum = 0.0;
    for (const auto& t : scores) sum += t.logprob;
    return sum;
}

double object_probability_per_token(const std::vector<TokenScore>& scores) {
    return object_probability(scores) / static_cast<double>(scores.size());
}

std::vector<PositionProbability> per_position_object_probabilities(const ScoringBackend& backend,
                                                                   const PromptSequence& seq) {
    if (seq.n == 0) throw ValidationError("sequence has no in-context pairs");
    std::vector<PositionProbability> out;
    out.reserve(seq.n);
    const std::size_t sep_len = seq.separator.size();
    for (std::size_t i = 0; i < seq.n; ++i) {
        const CharSpan& obj = seq.pair_spans[i].second;
        if (obj.offset < sep_len)
            throw AlignmentError("object span at position " + std::to_string(i) +
                                 " has no leading separator");
        const std::size_t ctx_end = obj.offset - sep_len;
        const std::string context = seq.text.substr(0, ctx_end);
        const std::string continuation = seq.text.substr(ctx_end, sep_len + obj.length);
        const auto scores = backend.score_continuation(context, continuation);
        std::string rebuilt;
        for (const auto& t : scores) rebuilt += t.token_text;
        if (rebuilt != continuation)
            throw AlignmentError("backend tokens do not cover the object at position " +
                                 std::to_string(i));
        PositionProbability p;
        p.position = i;
        p.joint_logprob = object_probability(scores);
        p.mean_token_logprob = p.joint_logprob / static_cast<double>(scores.size());
        p.token_count = scores.size();
        out.push_back(p);
    }
    return out;
}

}  // namespace zplke

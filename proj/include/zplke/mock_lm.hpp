#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "zplke/scoring.hpp"

namespace zplke {

// Deterministic word-level oracle language model. Tokenization splits on
// single spaces, one word per token. After a known subject the expected
// object word gets probability eps + (p_max - eps) * min(1, seen/ramp) with
// the remainder uniform over the confusion set; unknown subjects and all
// other positions draw uniformly from the confusion set. seen counts the
// known (subject, object) pairs completed earlier in the text, so confidence
// ramps up with the number of correct in-context demonstrations.
class MockOracleLM : public ScoringBackend {
public:
    struct KnowledgeEntry {
        std::string object;                // word sequence
        bool known = true;                 // false: behaves like a never-seen subject
        std::optional<std::size_t> ramp;   // per-subject override of n_ramp
    };

    struct Config {
        std::string model_id = "mock-oracle";
        std::map<std::string, KnowledgeEntry> knowledge;  // subject -> entry
        std::size_t n_ramp = 10;
        double p_max = 0.9;
        double epsilon = 1e-4;
        std::vector<std::string> confusion_set;
        // Scale of deterministic pseudo-random weight noise on the uniform
        // states. Zero keeps them exactly uniform (ties resolve by candidate
        // order downstream); a tiny positive value makes argmax behave like
        // a uniformly random guess.
        double tie_jitter = 0.0;
    };

    explicit MockOracleLM(Config config);

    std::string model_id() const override { return config_.model_id; }
    BackendKind kind() const override { return BackendKind::mock; }

    std::vector<TokenScore> score_continuation(const std::string& context,
                                               const std::string& continuation) const override;
    std::vector<std::string> generate_greedy(const std::string& context,
                                             std::size_t k) const override;

    // Full next-token distribution given a prefix, sorted by word. Exposed so
    // tests can check that every reachable conditional sums to one.
    std::vector<std::pair<std::string, double>> next_token_distribution(
        const std::string& prefix) const;

    const Config& config() const { return config_; }
    const std::set<std::string>& vocabulary() const { return vocabulary_; }

private:
    struct State {
        bool expecting = false;              // inside a known subject's object
        const KnowledgeEntry* entry = nullptr;
        const std::vector<std::string>* object_words = nullptr;
        std::size_t object_index = 0;
        std::size_t seen_known_pairs = 0;
        std::uint64_t fingerprint = 0;       // rolling hash of consumed words
    };

    double word_probability(const State& s, const std::string& word) const;
    std::vector<std::pair<std::string, double>> state_distribution(const State& s) const;
    // Runs the recognizer over `words`, recording the state in effect before
    // each word. Returns the final state.
    State trace(const std::vector<std::string>& words, std::vector<State>* before_each) const;
    double effective_prob(const State& s) const;

    Config config_;
    std::set<std::string> vocabulary_;
    std::vector<std::string> confusion_sorted_;
    struct SubjectMatch {
        std::vector<std::string> subject_words;
        const KnowledgeEntry* entry = nullptr;
        const std::vector<std::string>* object_words = nullptr;
    };
    // subject first word -> candidate subjects, longest first
    std::map<std::string, std::vector<SubjectMatch>> subject_index_;
    std::map<std::string, std::vector<std::string>> object_words_;  // subject -> object words
};

// Splits on single spaces. Throws ValidationError on consecutive spaces or
// leading/trailing space (which would create empty tokens).
std::vector<std::string> mock_tokenize(const std::string& text);

}  // namespace zplke

#include "zplke/mock_lm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zplke/errors.hpp"
#include "zplke/rng.hpp"

namespace zplke {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Deterministic unit-interval value for (fingerprint, word).
double jitter_unit(std::uint64_t fingerprint, const std::string& word) {
    std::uint64_t h = hash_bytes(word, fingerprint ^ 0x9E3779B97F4A7C15ull);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::uint64_t roll(std::uint64_t fingerprint, const std::string& word) {
    return hash_bytes(word, hash_bytes(std::string_view("\x1f", 1), fingerprint));
}

}  // namespace

std::vector<std::string> mock_tokenize(const std::string& text) {
    std::vector<std::string> words;
    if (text.empty()) return words;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == ' ') {
            if (i == start)
                throw ValidationError("mock tokenizer saw an empty word (double/edge space)");
            words.push_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    return words;
}

MockOracleLM::MockOracleLM(Config config) : config_(std::move(config)) {
    if (config_.p_max <= 0.0 || config_.p_max > 1.0)
        throw ValidationError("p_max must be in (0, 1]");
    if (config_.epsilon <= 0.0 || config_.epsilon >= config_.p_max)
        throw ValidationError("epsilon must satisfy 0 < epsilon < p_max");
    if (config_.n_ramp == 0) throw ValidationError("n_ramp must be >= 1");
    if (config_.confusion_set.empty()) throw ValidationError("confusion set is empty");
    if (config_.tie_jitter < 0.0) throw ValidationError("tie_jitter must be >= 0");

    confusion_sorted_ = config_.confusion_set;
    std::sort(confusion_sorted_.begin(), confusion_sorted_.end());
    confusion_sorted_.erase(std::unique(confusion_sorted_.begin(), confusion_sorted_.end()),
                            confusion_sorted_.end());
    vocabulary_.insert(confusion_sorted_.begin(), confusion_sorted_.end());

    for (const auto& [subject, entry] : config_.knowledge) {
        auto subj_words = mock_tokenize(subject);
        auto obj_words = mock_tokenize(entry.object);
        if (subj_words.empty() || obj_words.empty())
            throw ValidationError("knowledge entry with empty subject or object");
        if (entry.ramp && *entry.ramp == 0)
            throw ValidationError("per-subject ramp must be >= 1");
        vocabulary_.insert(subj_words.begin(), subj_words.end());
        vocabulary_.insert(obj_words.begin(), obj_words.end());
        object_words_[subject] = std::move(obj_words);
        subject_index_[subj_words.front()].push_back(
            SubjectMatch{std::move(subj_words), &entry, &object_words_.at(subject)});
    }
    for (auto& [first, cands] : subject_index_) {
        std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
            return a.subject_words.size() > b.subject_words.size();
        });
    }
    // Object words must be drawable: every object word is in the vocabulary
    // by construction, but known-state mass is split between the expected
    // word and the confusion set, so confusion must not be a singleton equal
    // to an expected word.
    for (const auto& [subject, entry] : config_.knowledge) {
        (void)subject;
        for (const auto& w : object_words_.at(subject))
            if (confusion_sorted_.size() == 1 && confusion_sorted_.front() == w)
                throw ValidationError("confusion set collapses onto expected word '" + w + "'");
    }
}

double MockOracleLM::effective_prob(const State& s) const {
    const std::size_t ramp = s.entry->ramp.value_or(config_.n_ramp);
    const double frac =
        std::min(1.0, static_cast<double>(s.seen_known_pairs) / static_cast<double>(ramp));
    return config_.epsilon + (config_.p_max - config_.epsilon) * frac;
}

double MockOracleLM::word_probability(const State& s, const std::string& word) const {
    if (s.expecting && s.entry->known) {
        const std::string& expected = (*s.object_words)[s.object_index];
        const double p_eff = effective_prob(s);
        if (word == expected) return p_eff;
        const bool expected_in_confusion =
            std::binary_search(confusion_sorted_.begin(), confusion_sorted_.end(), expected);
        const std::size_t residual_support =
            confusion_sorted_.size() - (expected_in_confusion ? 1 : 0);
        if (residual_support == 0) return 0.0;
        if (std::binary_search(confusion_sorted_.begin(), confusion_sorted_.end(), word))
            return (1.0 - p_eff) / static_cast<double>(residual_support);
        return 0.0;
    }
    // Background state: uniform over the confusion set, optionally with
    // deterministic tie-breaking noise.
    if (!std::binary_search(confusion_sorted_.begin(), confusion_sorted_.end(), word)) return 0.0;
    if (config_.tie_jitter == 0.0) return 1.0 / static_cast<double>(confusion_sorted_.size());
    double total = 0.0;
    for (const auto& w : confusion_sorted_) total += 1.0 + config_.tie_jitter * jitter_unit(s.fingerprint, w);
    return (1.0 + config_.tie_jitter * jitter_unit(s.fingerprint, word)) / total;
}

std::vector<std::pair<std::string, double>> MockOracleLM::state_distribution(const State& s) const {
    std::vector<std::pair<std::string, double>> dist;
    dist.reserve(vocabulary_.size());
    for (const auto& w : vocabulary_) {
        const double p = word_probability(s, w);
        if (p > 0.0) dist.emplace_back(w, p);
    }
    return dist;
}

MockOracleLM::State MockOracleLM::trace(const std::vector<std::string>& words,
                                        std::vector<State>* before_each) const {
    State s;
    if (before_each) before_each->assign(words.size(), State{});
    std::size_t i = 0;
    while (i < words.size()) {
        if (s.expecting) {
            const std::string& expected = (*s.object_words)[s.object_index];
            if (words[i] == expected) {
                if (before_each) (*before_each)[i] = s;
                s.fingerprint = roll(s.fingerprint, words[i]);
                ++s.object_index;
                ++i;
                if (s.object_index == s.object_words->size()) {
                    if (s.entry->known) ++s.seen_known_pairs;
                    s.expecting = false;
                    s.entry = nullptr;
                    s.object_words = nullptr;
                    s.object_index = 0;
                }
                continue;
            }
            // Mismatch aborts the pair; reinterpret this word in scan mode.
            s.expecting = false;
            s.entry = nullptr;
            s.object_words = nullptr;
            s.object_index = 0;
        }
        // Scan mode: longest subject match starting here, else noise word.
        const SubjectMatch* matched = nullptr;
        if (auto it = subject_index_.find(words[i]); it != subject_index_.end()) {
            for (const auto& cand : it->second) {
                if (i + cand.subject_words.size() > words.size()) continue;
                bool ok = true;
                for (std::size_t j = 1; j < cand.subject_words.size() && ok; ++j)
                    ok = (words[i + j] == cand.subject_words[j]);
                if (ok) {
                    matched = &cand;
                    break;
                }
            }
        }
        if (matched) {
            for (std::size_t j = 0; j < matched->subject_words.size(); ++j) {
                if (before_each) (*before_each)[i + j] = s;
                s.fingerprint = roll(s.fingerprint, words[i + j]);
            }
            s.expecting = true;
            s.entry = matched->entry;
            s.object_words = matched->object_words;
            s.object_index = 0;
            i += matched->subject_words.size();
        } else {
            if (before_each) (*before_each)[i] = s;
            s.fingerprint = roll(s.fingerprint, words[i]);
            ++i;
        }
    }
    return s;
}

std::vector<TokenScore> MockOracleLM::score_continuation(const std::string& context,
                                                         const std::string& continuation) const {
    if (continuation.empty()) throw ValidationError("continuation is empty");
    if (!context.empty() && context.back() != ' ' && continuation.front() != ' ')
        throw ProtocolError("continuation does not start at a token boundary");

    const std::string full = context + continuation;
    const auto words = mock_tokenize(full);
    std::vector<State> before;
    trace(words, &before);

    // Recover word char positions to map words onto the continuation slice.
    std::vector<TokenScore> out;
    std::size_t pos = 0;
    for (std::size_t w = 0; w < words.size(); ++w) {
        const std::size_t word_start = pos;
        pos += words[w].size();
        const std::size_t word_end = pos;
        if (pos < full.size()) ++pos;  // the single separating space
        if (word_end <= context.size()) continue;
        if (word_start < context.size())
            throw ProtocolError("a token straddles the context/continuation boundary");
        // The preceding space belongs to this token when it lies inside the
        // continuation.
        std::size_t tok_start = word_start;
        if (word_start > 0 && word_start - 1 >= context.size()) tok_start = word_start - 1;
        TokenScore t;
        t.token_text = full.substr(tok_start, word_end - tok_start);
        t.char_offset = tok_start - context.size();
        const double p = word_probability(before[w], words[w]);
        t.logprob = p > 0.0 ? std::log(p) : kNegInf;
        out.push_back(std::move(t));
    }
    if (out.empty()) throw ValidationError("continuation contains no tokens");
    return out;
}

std::vector<std::string> MockOracleLM::generate_greedy(const std::string& context,
                                                       std::size_t k) const {
    if (k == 0) throw ValidationError("k must be >= 1");
    std::vector<std::string> words = mock_tokenize(context);
    std::vector<std::string> generated;
    generated.reserve(k);
    for (std::size_t step = 0; step < k; ++step) {
        const State s = trace(words, nullptr);
        const auto dist = state_distribution(s);
        if (dist.empty()) throw CapabilityError("no next token has positive probability");
        // Argmax; ties resolve to the lexicographically smallest word (the
        // distribution is already sorted by word).
        const auto best = std::max_element(
            dist.begin(), dist.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
        generated.push_back(best->first);
        words.push_back(best->first);
    }
    return generated;
}

std::vector<std::pair<std::string, double>> MockOracleLM::next_token_distribution(
    const std::string& prefix) const {
    const auto words = mock_tokenize(prefix);
    const State s = trace(words, nullptr);
    return state_distribution(s);
}

}  // namespace zplke

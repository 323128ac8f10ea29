#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "zplke/facts.hpp"

namespace zplke {

struct CharSpan {
    std::size_t offset = 0;
    std::size_t length = 0;

    std::size_t end() const { return offset + length; }
    bool operator==(const CharSpan&) const = default;
};

// A rendered zero-prompt input: subject/object pairs joined by a separator,
// ending at the query subject. No instruction text, no trailing separator;
// candidate continuations are scored as separator + object.
struct PromptSequence {
    std::string text;
    std::string separator;
    std::vector<std::pair<CharSpan, CharSpan>> pair_spans;  // (subject, object) per pair
    CharSpan query_span;
    std::size_t n = 0;  // in-context pair count

    std::string_view slice(const CharSpan& s) const {
        return std::string_view(text).substr(s.offset, s.length);
    }
};

// Renders x1 sep y1 sep ... sep xn sep yn sep x. Throws ValidationError when
// examples are empty, relations are mixed, the query subject is empty, or the
// separator contains any subject/object as a substring (span ambiguity).
PromptSequence build_sequence(const std::vector<Fact>& examples, const std::string& query_subject,
                              const std::string& separator = " ");

enum class PerturbationKind { unknown, incorrect };
enum class Placement { distributed, continuous };

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::unknown;
    Placement placement = Placement::distributed;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    // Replacement pairs for kind=unknown; for kind=incorrect an optional
    // corruption pool of same-relation objects (defaults to the example
    // list's own objects).
    std::vector<Fact> replacement_pool;

    std::string to_json() const;
    static PerturbationSpec from_json(const std::string& text);
};

struct PerturbationResult {
    std::vector<Fact> examples;
    std::vector<std::size_t> replaced_positions;  // sorted ascending
};

// Replaces `count` in-context examples. unknown swaps whole pairs with pool
// entries; incorrect keeps the subject and swaps the object for a different
// same-relation object. distributed draws positions uniformly without
// replacement; continuous replaces one uniformly placed contiguous block.
PerturbationResult apply_perturbation(const std::vector<Fact>& examples,
                                      const PerturbationSpec& spec);

// Substitutes {subject} into a baseline template; the placeholder must occur
// exactly once.
std::string build_template_prompt(const std::string& tmpl, const std::string& subject);

}  // namespace zplke

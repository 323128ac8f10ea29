#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace zplke {

// One knowledge-graph triple: subject x, relation r, object y.
// Text fields are NFC-normalized and whitespace-trimmed at load time and
// immutable afterwards.
struct Fact {
    std::string subject;
    std::string relation_id;
    std::string object;

    bool operator==(const Fact&) const = default;
    auto operator<=>(const Fact&) const = default;

    // Identity used for set operations and record keys: the triple content.
    std::string id() const { return subject + "\t" + relation_id + "\t" + object; }
};

// A test fact with the correct object y* plus M plausible but incorrect
// alternatives Y.
struct MultipleChoiceFact {
    std::string subject;
    std::string relation_id;
    std::string correct_object;
    std::vector<std::string> alternatives;  // ordered, pairwise distinct, excludes correct_object

    std::size_t m() const { return alternatives.size(); }
    std::string id() const { return subject + "\t" + relation_id + "\t" + correct_object; }

    bool operator==(const MultipleChoiceFact&) const = default;
};

// Throws ValidationError if the invariants do not hold.
void validate(const Fact& f);
void validate(const MultipleChoiceFact& f);

// Per-relation benchmark slice: in-context training facts plus
// multiple-choice test facts, subject-disjoint.
struct RelationDataset {
    std::string relation_id;
    std::vector<Fact> train;
    std::vector<MultipleChoiceFact> test;
    std::map<std::string, std::string> alias_map;  // surface form -> canonical form

    void validate() const;  // throws ValidationError
};

// A model's estimated knowledge: per-relation accuracy and the set of fact
// ids predicted correctly.
struct KnowledgeProfile {
    std::string model_id;
    std::map<std::string, double> per_relation_accuracy;
    std::set<std::string> known_facts;

    void validate() const;  // accuracies in [0,1]
};

enum class FactFormat { tsv, jsonl };

struct LoadResult {
    std::vector<Fact> facts;
    std::size_t duplicates_dropped = 0;
};

// Parses a fact stream. TSV: subject<TAB>relation<TAB>object, UTF-8, "\t"
// escape inside fields. JSONL: {"subject":..., "relation":..., "object":...}.
// Fields are NFC-normalized and trimmed; duplicate triples are dropped with a
// count. Throws ParseError with the offending line, ValidationError for empty
// subject/object.
LoadResult load_facts(std::istream& in, FactFormat format);
LoadResult load_facts_file(const std::string& path);  // format from extension

// Multiple-choice JSONL: {"subject","relation","correct_object","alternatives"}.
std::vector<MultipleChoiceFact> load_mc_facts(std::istream& in);
std::vector<MultipleChoiceFact> load_mc_facts_file(const std::string& path);

void write_facts_tsv(std::ostream& out, const std::vector<Fact>& facts);
void write_facts_jsonl(std::ostream& out, const std::vector<Fact>& facts);
void write_mc_facts_jsonl(std::ostream& out, const std::vector<MultipleChoiceFact>& facts);

// NFC-normalize and trim surrounding whitespace. Exposed for alias maps and
// query subjects so every text path shares one canonical form.
std::string canonicalize_text(const std::string& s);

struct SplitResult {
    std::vector<Fact> train;
    std::vector<Fact> heldout;
};

// Deterministic split into n_train training facts and the rest, with
// subject-disjoint sides (all facts of one subject land on the same side).
// Throws ValidationError if n_train >= |facts|, relations are mixed, or no
// subject grouping can hit n_train exactly.
SplitResult split_dataset(const std::vector<Fact>& facts, std::size_t n_train, std::uint64_t seed);

}  // namespace zplke

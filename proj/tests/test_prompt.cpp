#include <doctest.h>

#include <set>

#include "zplke/errors.hpp"
#include "zplke/prompt.hpp"
#include "zplke/rng.hpp"

using namespace zplke;

namespace {

std::vector<Fact> birth_year_pairs() {
    return {Fact{"Feynman", "birth-year", "1918"}, Fact{"Heisenberg", "birth-year", "1901"}};
}

void check_spans(const PromptSequence& seq, const std::vector<Fact>& examples,
                 const std::string& query) {
    REQUIRE(seq.pair_spans.size() == examples.size());
    std::size_t last_end = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& [subj, obj] = seq.pair_spans[i];
        CHECK(seq.slice(subj) == examples[i].subject);
        CHECK(seq.slice(obj) == examples[i].object);
        CHECK(subj.offset >= last_end);
        CHECK(subj.end() <= obj.offset);
        last_end = obj.end();
    }
    CHECK(seq.query_span.offset >= last_end);
    CHECK(seq.slice(seq.query_span) == query);
    CHECK(seq.query_span.end() == seq.text.size());  // no trailing separator
}

}  // namespace

TEST_CASE("zero-prompt rendering matches the canonical birth-year example") {
    const auto seq = build_sequence(birth_year_pairs(), "Einstein");
    CHECK(seq.text == "Feynman 1918 Heisenberg 1901 Einstein");
    CHECK(seq.n == 2);
    check_spans(seq, birth_year_pairs(), "Einstein");
}

TEST_CASE("single pair with query equal to the subject produces three spans") {
    std::vector<Fact> one{Fact{"x1", "r", "y1"}};
    const auto seq = build_sequence(one, "x1");
    CHECK(seq.text == "x1 y1 x1");
    CHECK(seq.pair_spans.size() == 1);
    CHECK(seq.slice(seq.pair_spans[0].first) == "x1");
    CHECK(seq.slice(seq.pair_spans[0].second) == "y1");
    CHECK(seq.slice(seq.query_span) == "x1");
    CHECK(seq.query_span.offset == 6);
}

TEST_CASE("multi-character separators shift spans but keep the slice property") {
    const auto seq = build_sequence(birth_year_pairs(), "Einstein", "; ");
    CHECK(seq.text == "Feynman; 1918; Heisenberg; 1901; Einstein");
    check_spans(seq, birth_year_pairs(), "Einstein");
    // Independent recomputation: locate each piece by string search.
    std::size_t cursor = 0;
    const auto pairs = birth_year_pairs();
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& ex = pairs[i];
        const auto spos = seq.text.find(ex.subject, cursor);
        CHECK(spos == seq.pair_spans[i].first.offset);
        const auto opos = seq.text.find(ex.object, spos);
        CHECK(opos == seq.pair_spans[i].second.offset);
        cursor = opos + ex.object.size();
    }
}

TEST_CASE("span slice property holds for randomized sequences") {
    SeededRng rng(99);
    for (int round = 0; round < 50; ++round) {
        std::vector<Fact> examples;
        const std::size_t n = 1 + rng.next_below(20);
        for (std::size_t i = 0; i < n; ++i)
            examples.push_back(Fact{"subj" + std::to_string(rng.next_below(1000)), "r",
                                    "obj" + std::to_string(rng.next_below(1000))});
        const auto seq = build_sequence(examples, "query", " ");
        check_spans(seq, examples, "query");

        // Injectivity: no two pairs share a span.
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (const auto& [subj, obj] : seq.pair_spans) {
            CHECK(seen.insert({subj.offset, subj.length}).second);
            CHECK(seen.insert({obj.offset, obj.length}).second);
        }
    }
}

TEST_CASE("build_sequence rejects invalid input") {
    CHECK_THROWS_AS(build_sequence({}, "q"), ValidationError);
    CHECK_THROWS_AS(build_sequence(birth_year_pairs(), ""), ValidationError);
    std::vector<Fact> mixed{Fact{"a", "r1", "1"}, Fact{"b", "r2", "2"}};
    CHECK_THROWS_AS(build_sequence(mixed, "q"), ValidationError);
    // Separator containing an example object is ambiguous.
    std::vector<Fact> facts{Fact{"a", "r", "x"}};
    CHECK_THROWS_AS(build_sequence(facts, "q", " x "), ValidationError);
}

TEST_CASE("count=0 perturbation is the identity") {
    const auto examples = birth_year_pairs();
    PerturbationSpec spec;
    spec.count = 0;
    const auto result = apply_perturbation(examples, spec);
    CHECK(result.examples == examples);
    CHECK(result.replaced_positions.empty());
}

TEST_CASE("distributed replacement picks distinct reproducible positions") {
    std::vector<Fact> examples;
    for (int i = 0; i < 200; ++i)
        examples.push_back(Fact{"s" + std::to_string(i), "r", "o" + std::to_string(i)});

    PerturbationSpec spec;
    spec.kind = PerturbationKind::incorrect;
    spec.placement = Placement::distributed;
    spec.count = 40;
    spec.seed = 17;
    const auto a = apply_perturbation(examples, spec);
    const auto b = apply_perturbation(examples, spec);
    CHECK(a.replaced_positions == b.replaced_positions);
    CHECK(a.examples == b.examples);
    std::set<std::size_t> distinct(a.replaced_positions.begin(), a.replaced_positions.end());
    CHECK(distinct.size() == 40);
    CHECK(*distinct.rbegin() < 200);
}

TEST_CASE("continuous replacement is one in-bounds block for every seed") {
    std::vector<Fact> examples;
    for (int i = 0; i < 200; ++i)
        examples.push_back(Fact{"s" + std::to_string(i), "r", "o" + std::to_string(i)});

    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        PerturbationSpec spec;
        spec.kind = PerturbationKind::incorrect;
        spec.placement = Placement::continuous;
        spec.count = 40;
        spec.seed = seed;
        const auto result = apply_perturbation(examples, spec);
        REQUIRE(result.replaced_positions.size() == 40);
        const std::size_t start = result.replaced_positions.front();
        CHECK(start + 40 <= 200);
        for (std::size_t i = 0; i < 40; ++i) CHECK(result.replaced_positions[i] == start + i);
    }
}

TEST_CASE("incorrect perturbation keeps subjects and changes exactly count objects") {
    std::vector<Fact> examples;
    for (int i = 0; i < 50; ++i)
        examples.push_back(Fact{"s" + std::to_string(i), "r", "o" + std::to_string(i)});

    PerturbationSpec spec;
    spec.kind = PerturbationKind::incorrect;
    spec.count = 10;
    spec.seed = 5;
    const auto result = apply_perturbation(examples, spec);
    CHECK(result.examples.size() == examples.size());
    std::size_t changed = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        CHECK(result.examples[i].subject == examples[i].subject);
        if (result.examples[i].object != examples[i].object) ++changed;
    }
    CHECK(changed == 10);
    for (std::size_t pos : result.replaced_positions)
        CHECK(result.examples[pos].object != examples[pos].object);
}

TEST_CASE("incorrect perturbation fails when no distinct object exists") {
    std::vector<Fact> examples{Fact{"a", "r", "same"}, Fact{"b", "r", "same"}};
    PerturbationSpec spec;
    spec.kind = PerturbationKind::incorrect;
    spec.count = 1;
    CHECK_THROWS_AS(apply_perturbation(examples, spec), ValidationError);
}

TEST_CASE("unknown perturbation swaps whole pairs from the pool") {
    std::vector<Fact> examples;
    for (int i = 0; i < 10; ++i)
        examples.push_back(Fact{"s" + std::to_string(i), "r", "o" + std::to_string(i)});
    PerturbationSpec spec;
    spec.kind = PerturbationKind::unknown;
    spec.count = 3;
    spec.seed = 1;
    spec.replacement_pool = {Fact{"Zorblat Quint", "r", "qq1"}, Fact{"Mira Voss", "r", "qq2"},
                             Fact{"Olen Trask", "r", "qq3"}};
    const auto result = apply_perturbation(examples, spec);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& f = result.examples[result.replaced_positions[i]];
        CHECK(f.subject == spec.replacement_pool[i].subject);
        CHECK(f.object == spec.replacement_pool[i].object);
    }
    // Pool too small is rejected.
    spec.count = 4;
    CHECK_THROWS_AS(apply_perturbation(examples, spec), ValidationError);
}

TEST_CASE("perturbation spec serializes to json and back") {
    PerturbationSpec spec;
    spec.kind = PerturbationKind::incorrect;
    spec.placement = Placement::continuous;
    spec.count = 40;
    spec.seed = 123;
    const auto round = PerturbationSpec::from_json(spec.to_json());
    CHECK(round.kind == spec.kind);
    CHECK(round.placement == spec.placement);
    CHECK(round.count == spec.count);
    CHECK(round.seed == spec.seed);
}

TEST_CASE("template substitution") {
    CHECK(build_template_prompt("The capital of {subject} is", "France") ==
          "The capital of France is");
    CHECK(build_template_prompt("{subject}", "X") == "X");
    CHECK_THROWS_AS(build_template_prompt("no placeholder", "X"), ValidationError);
    CHECK_THROWS_AS(build_template_prompt("{subject} and {subject}", "X"), ValidationError);
}

#include "zplke/prompt.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "zplke/errors.hpp"
#include "zplke/rng.hpp"

namespace zplke {

using json = nlohmann::json;

PromptSequence build_sequence(const std::vector<Fact>& examples, const std::string& query_subject,
                              const std::string& separator) {
    if (examples.empty()) throw ValidationError("build_sequence requires at least one example");
    if (query_subject.empty()) throw ValidationError("query subject is empty");
    const std::string& rel = examples.front().relation_id;
    for (const auto& f : examples) {
        if (f.relation_id != rel)
            throw ValidationError("examples mix relations " + rel + " and " + f.relation_id);
        if (!separator.empty()) {
            if (separator.find(f.subject) != std::string::npos ||
                separator.find(f.object) != std::string::npos)
                throw ValidationError("separator contains a subject/object, spans would be ambiguous");
        }
    }
    if (separator.find(query_subject) != std::string::npos)
        throw ValidationError("separator contains the query subject");

    PromptSequence seq;
    seq.separator = separator;
    seq.n = examples.size();
    auto append = [&seq](const std::string& piece) {
        CharSpan span{seq.text.size(), piece.size()};
        seq.text += piece;
        return span;
    };
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (i > 0) seq.text += separator;
        CharSpan subj = append(examples[i].subject);
        seq.text += separator;
        CharSpan obj = append(examples[i].object);
        seq.pair_spans.emplace_back(subj, obj);
    }
    seq.text += separator;
    seq.query_span = append(query_subject);
    return seq;
}

std::string PerturbationSpec::to_json() const {
    json j{{"kind", kind == PerturbationKind::unknown ? "unknown" : "incorrect"},
           {"placement", placement == Placement::distributed ? "distributed" : "continuous"},
           {"count", count},
           {"seed", seed}};
    return j.dump();
}

PerturbationSpec PerturbationSpec::from_json(const std::string& text) {
    json j = json::parse(text);
    PerturbationSpec spec;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "unknown")
        spec.kind = PerturbationKind::unknown;
    else if (kind == "incorrect")
        spec.kind = PerturbationKind::incorrect;
    else
        throw ValidationError("unknown perturbation kind: " + kind);
    const auto placement = j.at("placement").get<std::string>();
    if (placement == "distributed")
        spec.placement = Placement::distributed;
    else if (placement == "continuous")
        spec.placement = Placement::continuous;
    else
        throw ValidationError("unknown placement: " + placement);
    spec.count = j.at("count").get<std::size_t>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

PerturbationResult apply_perturbation(const std::vector<Fact>& examples,
                                      const PerturbationSpec& spec) {
    if (spec.count > examples.size())
        throw ValidationError("perturbation count exceeds example count");

    PerturbationResult result;
    result.examples = examples;
    if (spec.count == 0) return result;

    SeededRng rng(derive_seed(spec.seed, {"perturb"}));
    if (spec.placement == Placement::distributed) {
        result.replaced_positions = rng.sample_indices(examples.size(), spec.count);
    } else {
        const std::size_t start = rng.next_below(examples.size() - spec.count + 1);
        for (std::size_t i = 0; i < spec.count; ++i) result.replaced_positions.push_back(start + i);
    }

    if (spec.kind == PerturbationKind::unknown) {
        if (spec.replacement_pool.size() < spec.count)
            throw ValidationError("unknown-example pool smaller than replacement count");
        for (std::size_t i = 0; i < spec.count; ++i) {
            Fact repl = spec.replacement_pool[i];
            repl.relation_id = examples.front().relation_id;
            result.examples[result.replaced_positions[i]] = std::move(repl);
        }
    } else {
        // Corruption pool: distinct same-relation objects, from the explicit
        // pool when given, otherwise from the example list itself.
        std::set<std::string> object_pool;
        if (!spec.replacement_pool.empty()) {
            for (const auto& f : spec.replacement_pool) object_pool.insert(f.object);
        } else {
            for (const auto& f : examples) object_pool.insert(f.object);
        }
        std::vector<std::string> objects(object_pool.begin(), object_pool.end());
        for (std::size_t pos : result.replaced_positions) {
            const std::string& original = result.examples[pos].object;
            std::string replacement;
            std::size_t attempts = objects.size();
            while (attempts-- > 0) {
                const auto& cand = objects[rng.next_below(objects.size())];
                if (cand != original) {
                    replacement = cand;
                    break;
                }
            }
            if (replacement.empty()) {
                // Pool may be all-equal to the original; scan for any other.
                for (const auto& cand : objects)
                    if (cand != original) {
                        replacement = cand;
                        break;
                    }
            }
            if (replacement.empty())
                throw ValidationError("no corrupted object distinct from '" + original +
                                      "' is available");
            result.examples[pos].object = replacement;
        }
    }
    return result;
}

std::string build_template_prompt(const std::string& tmpl, const std::string& subject) {
    static const std::string placeholder = "{subject}";
    const auto first = tmpl.find(placeholder);
    if (first == std::string::npos)
        throw ValidationError("template is missing the {subject} placeholder");
    if (tmpl.find(placeholder, first + 1) != std::string::npos)
        throw ValidationError("template contains multiple {subject} placeholders");
    std::string out = tmpl;
    out.replace(first, placeholder.size(), subject);
    return out;
}

}  // namespace zplke

#include "zplke/facts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <unicode/errorcode.h>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <nlohmann/json.hpp>

#include "zplke/errors.hpp"
#include "zplke/rng.hpp"

namespace zplke {

using json = nlohmann::json;

namespace {

std::string nfc(const std::string& s) {
    icu::ErrorCode status;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (status.isFailure()) throw std::runtime_error("ICU NFC unavailable");
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(s);
    icu::UnicodeString out = norm->normalize(u, status);
    if (status.isFailure()) throw ValidationError("NFC normalization failed for: " + s);
    std::string result;
    out.toUTF8String(result);
    return result;
}

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string unescape_tsv(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size() && s[i + 1] == 't') {
            out += '\t';
            ++i;
        } else {
            out += s[i];
        }
    }
    return out;
}

std::string escape_tsv(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\t')
            out += "\\t";
        else
            out += c;
    }
    return out;
}

Fact make_fact(std::string subject, std::string relation, std::string object, long line) {
    Fact f{canonicalize_text(subject), canonicalize_text(relation), canonicalize_text(object)};
    try {
        validate(f);
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), line);
    }
    return f;
}

}  // namespace

std::string canonicalize_text(const std::string& s) { return nfc(trim(s)); }

void validate(const Fact& f) {
    if (f.subject.empty()) throw ValidationError("empty subject");
    if (f.object.empty()) throw ValidationError("empty object");
    if (f.relation_id.empty()) throw ValidationError("empty relation_id");
    auto trimmed = [](const std::string& s) {
        return !std::isspace(static_cast<unsigned char>(s.front())) &&
               !std::isspace(static_cast<unsigned char>(s.back()));
    };
    if (!trimmed(f.subject) || !trimmed(f.object))
        throw ValidationError("subject/object carries surrounding whitespace");
}

void validate(const MultipleChoiceFact& f) {
    validate(Fact{f.subject, f.relation_id, f.correct_object});
    if (f.alternatives.empty()) throw ValidationError("multiple-choice fact needs M >= 1 alternatives");
    std::unordered_set<std::string> seen;
    for (const auto& a : f.alternatives) {
        if (a == f.correct_object)
            throw ValidationError("correct object appears among alternatives: " + a);
        if (!seen.insert(a).second)
            throw ValidationError("duplicate alternative: " + a);
    }
}

void RelationDataset::validate() const {
    std::unordered_set<std::string> train_subjects;
    for (const auto& f : train) {
        if (f.relation_id != relation_id)
            throw ValidationError("train fact relation mismatch: " + f.relation_id);
        train_subjects.insert(f.subject);
    }
    for (const auto& f : test) {
        if (f.relation_id != relation_id)
            throw ValidationError("test fact relation mismatch: " + f.relation_id);
        if (train_subjects.count(f.subject))
            throw ValidationError("test subject appears in train split: " + f.subject);
        zplke::validate(f);
    }
}

void KnowledgeProfile::validate() const {
    for (const auto& [rel, acc] : per_relation_accuracy) {
        if (acc < 0.0 || acc > 1.0)
            throw ValidationError("accuracy out of [0,1] for relation " + rel);
    }
}

LoadResult load_facts(std::istream& in, FactFormat format) {
    LoadResult result;
    std::unordered_set<std::string> seen;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Fact f;
        if (format == FactFormat::tsv) {
            const auto t1 = line.find('\t');
            const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
            if (t2 == std::string::npos)
                throw ParseError("expected 3 tab-separated columns", lineno);
            if (line.find('\t', t2 + 1) != std::string::npos)
                throw ParseError("too many columns", lineno);
            f = make_fact(unescape_tsv(line.substr(0, t1)),
                          unescape_tsv(line.substr(t1 + 1, t2 - t1 - 1)),
                          unescape_tsv(line.substr(t2 + 1)), lineno);
        } else {
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error& e) {
                throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
            }
            if (!j.contains("subject") || !j.contains("relation") || !j.contains("object"))
                throw ParseError("missing subject/relation/object key", lineno);
            f = make_fact(j["subject"].get<std::string>(), j["relation"].get<std::string>(),
                          j["object"].get<std::string>(), lineno);
        }
        if (seen.insert(f.id()).second)
            result.facts.push_back(std::move(f));
        else
            ++result.duplicates_dropped;
    }
    return result;
}

LoadResult load_facts_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    const bool jsonl = path.size() > 6 && path.rfind(".jsonl") == path.size() - 6;
    return load_facts(in, jsonl ? FactFormat::jsonl : FactFormat::tsv);
}

std::vector<MultipleChoiceFact> load_mc_facts(std::istream& in) {
    std::vector<MultipleChoiceFact> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
        }
        if (!j.contains("subject") || !j.contains("relation") || !j.contains("correct_object") ||
            !j.contains("alternatives"))
            throw ParseError("missing multiple-choice key", lineno);
        MultipleChoiceFact f;
        f.subject = canonicalize_text(j["subject"].get<std::string>());
        f.relation_id = canonicalize_text(j["relation"].get<std::string>());
        f.correct_object = canonicalize_text(j["correct_object"].get<std::string>());
        for (const auto& a : j["alternatives"])
            f.alternatives.push_back(canonicalize_text(a.get<std::string>()));
        try {
            validate(f);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), lineno);
        }
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<MultipleChoiceFact> load_mc_facts_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return load_mc_facts(in);
}

void write_facts_tsv(std::ostream& out, const std::vector<Fact>& facts) {
    for (const auto& f : facts)
        out << escape_tsv(f.subject) << '\t' << escape_tsv(f.relation_id) << '\t'
            << escape_tsv(f.object) << '\n';
}

void write_facts_jsonl(std::ostream& out, const std::vector<Fact>& facts) {
    for (const auto& f : facts) {
        json j{{"subject", f.subject}, {"relation", f.relation_id}, {"object", f.object}};
        out << j.dump() << '\n';
    }
}

void write_mc_facts_jsonl(std::ostream& out, const std::vector<MultipleChoiceFact>& facts) {
    for (const auto& f : facts) {
        json j{{"subject", f.subject},
               {"relation", f.relation_id},
               {"correct_object", f.correct_object},
               {"alternatives", f.alternatives}};
        out << j.dump() << '\n';
    }
}

SplitResult split_dataset(const std::vector<Fact>& facts, std::size_t n_train, std::uint64_t seed) {
    if (facts.empty()) throw ValidationError("cannot split an empty fact list");
    if (n_train >= facts.size())
        throw ValidationError("n_train must be smaller than the corpus size");
    const std::string& rel = facts.front().relation_id;
    for (const auto& f : facts)
        if (f.relation_id != rel)
            throw ValidationError("split_dataset requires a single relation, found " + rel +
                                  " and " + f.relation_id);

    // Group fact indices by subject so both sides stay subject-disjoint.
    std::vector<std::string> subjects;
    std::map<std::string, std::vector<std::size_t>> by_subject;
    for (std::size_t i = 0; i < facts.size(); ++i) {
        auto [it, fresh] = by_subject.try_emplace(facts[i].subject);
        if (fresh) subjects.push_back(facts[i].subject);
        it->second.push_back(i);
    }
    std::sort(subjects.begin(), subjects.end());
    SeededRng rng(derive_seed(seed, {rel, "split"}));
    rng.shuffle(subjects);

    // First-fit over the shuffled subject order until train holds exactly
    // n_train facts.
    std::vector<bool> in_train_subject(subjects.size(), false);
    std::size_t remaining = n_train;
    for (std::size_t i = 0; i < subjects.size() && remaining > 0; ++i) {
        const auto sz = by_subject[subjects[i]].size();
        if (sz <= remaining) {
            in_train_subject[i] = true;
            remaining -= sz;
        }
    }
    if (remaining != 0)
        throw ValidationError("no subject-disjoint split reaches exactly " +
                              std::to_string(n_train) + " training facts");

    std::unordered_set<std::string> train_subjects;
    for (std::size_t i = 0; i < subjects.size(); ++i)
        if (in_train_subject[i]) train_subjects.insert(subjects[i]);

    SplitResult result;
    for (const auto& f : facts) {
        if (train_subjects.count(f.subject))
            result.train.push_back(f);
        else
            result.heldout.push_back(f);
    }
    return result;
}

}  // namespace zplke

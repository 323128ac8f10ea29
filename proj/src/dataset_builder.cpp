#include "zplke/dataset_builder.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "zplke/errors.hpp"
#include "zplke/rng.hpp"

namespace zplke {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<std::string> filter_relations(const std::vector<Fact>& corpus, std::size_t min_facts,
                                          std::size_t min_unique_objects) {
    std::unordered_map<std::string, std::size_t> counts;
    std::unordered_map<std::string, std::unordered_set<std::string>> objects;
    for (const auto& f : corpus) {
        ++counts[f.relation_id];
        objects[f.relation_id].insert(f.object);
    }
    std::vector<std::string> out;
    for (const auto& [rel, n] : counts) {
        if (n >= min_facts && objects[rel].size() >= min_unique_objects) out.push_back(rel);
    }
    std::sort(out.begin(), out.end());
    return out;
}

MultipleChoiceFact sample_alternatives(
    const Fact& fact, const std::vector<Fact>& relation_pool, std::size_t m,
    const std::map<std::string, std::set<std::string>>& subject_objects_index,
    std::uint64_t seed) {
    std::set<std::string> excluded{fact.object};
    if (auto it = subject_objects_index.find(fact.subject); it != subject_objects_index.end())
        excluded.insert(it->second.begin(), it->second.end());

    std::set<std::string> eligible_set;
    for (const auto& f : relation_pool) {
        if (f.relation_id != fact.relation_id)
            throw ValidationError("relation pool mixes relations");
        if (!excluded.count(f.object)) eligible_set.insert(f.object);
    }
    if (eligible_set.size() < m)
        throw SamplingError("relation " + fact.relation_id + ": need " + std::to_string(m) +
                                " eligible alternatives for subject '" + fact.subject +
                                "', have " + std::to_string(eligible_set.size()),
                            fact.relation_id, m - eligible_set.size());

    // Deterministic per-fact stream: adding another fact to the corpus never
    // changes this fact's draw.
    std::vector<std::string> eligible(eligible_set.begin(), eligible_set.end());
    SeededRng rng(derive_seed(seed, {fact.relation_id, fact.subject, fact.object, "alts"}));
    const auto idx = rng.sample_indices(eligible.size(), m);
    MultipleChoiceFact mc;
    mc.subject = fact.subject;
    mc.relation_id = fact.relation_id;
    mc.correct_object = fact.object;
    // Shuffle the chosen set so alternative order is not sorted-by-object.
    std::vector<std::string> chosen;
    chosen.reserve(m);
    for (auto i : idx) chosen.push_back(eligible[i]);
    rng.shuffle(chosen);
    mc.alternatives = std::move(chosen);
    validate(mc);
    return mc;
}

namespace {

std::vector<Fact> canonicalize_corpus(const std::vector<Fact>& corpus,
                                      const std::map<std::string, std::string>& alias_map) {
    if (alias_map.empty()) return corpus;
    std::vector<Fact> out;
    out.reserve(corpus.size());
    for (Fact f : corpus) {
        if (auto it = alias_map.find(f.object); it != alias_map.end()) f.object = it->second;
        out.push_back(std::move(f));
    }
    return out;
}

std::string sanitize_filename(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')
                   ? c
                   : '_';
    return out;
}

}  // namespace

BuildResult build_mc_dataset(const std::vector<Fact>& corpus, const BuildConfig& config,
                             const std::map<std::string, std::string>& alias_map) {
    if (corpus.empty()) throw ValidationError("corpus is empty");
    if (config.n_train == 0) throw ValidationError("n_train must be >= 1");
    const auto canonical = canonicalize_corpus(corpus, alias_map);

    BuildResult result;
    result.manifest.seed = config.seed;
    result.manifest.min_facts = config.min_facts;
    result.manifest.min_unique_objects = config.min_unique_objects;
    result.manifest.m = config.m;
    result.manifest.n_train = config.n_train;

    const auto relations =
        filter_relations(canonical, config.min_facts, config.min_unique_objects);
    std::unordered_set<std::string> keep(relations.begin(), relations.end());

    std::map<std::string, std::vector<Fact>> by_relation;
    for (const auto& f : canonical)
        if (keep.count(f.relation_id)) by_relation[f.relation_id].push_back(f);

    for (const auto& rel : relations) {
        const auto& facts = by_relation[rel];
        // Dedup within the relation: alias mapping can collapse rows.
        std::vector<Fact> unique;
        std::unordered_set<std::string> seen;
        for (const auto& f : facts)
            if (seen.insert(f.id()).second) unique.push_back(f);

        if (config.n_train >= unique.size()) {
            result.manifest.dropped.emplace_back(
                rel, "n_train >= fact count (" + std::to_string(unique.size()) + ")");
            continue;
        }
        SplitResult split;
        try {
            split = split_dataset(unique, config.n_train, config.seed);
        } catch (const ValidationError& e) {
            result.manifest.dropped.emplace_back(rel, e.what());
            continue;
        }

        std::map<std::string, std::set<std::string>> subject_objects;
        for (const auto& f : unique) subject_objects[f.subject].insert(f.object);

        RelationDataset ds;
        ds.relation_id = rel;
        ds.train = split.train;
        ds.alias_map = alias_map;
        RelationReport report;
        report.relation_id = rel;
        report.train_count = split.train.size();
        for (const auto& f : split.heldout) {
            try {
                ds.test.push_back(
                    sample_alternatives(f, unique, config.m, subject_objects, config.seed));
            } catch (const SamplingError&) {
                ++report.sampling_failures;
            }
        }
        if (ds.test.empty()) {
            result.manifest.dropped.emplace_back(rel, "every test fact failed alternative sampling");
            continue;
        }
        report.test_count = ds.test.size();
        const double failure_fraction =
            static_cast<double>(report.sampling_failures) /
            static_cast<double>(report.test_count + report.sampling_failures);
        report.flagged = failure_fraction > config.flag_failure_fraction;
        ds.validate();
        result.datasets.push_back(std::move(ds));
        result.manifest.relations.push_back(std::move(report));
    }
    return result;
}

std::string BuildManifest::to_json() const {
    json j;
    j["seed"] = seed;
    j["thresholds"] = {{"min_facts", min_facts}, {"min_unique_objects", min_unique_objects}};
    j["m"] = m;
    j["n_train"] = n_train;
    j["relations"] = json::array();
    for (const auto& r : relations) {
        j["relations"].push_back({{"relation_id", r.relation_id},
                                  {"train_count", r.train_count},
                                  {"test_count", r.test_count},
                                  {"sampling_failures", r.sampling_failures},
                                  {"flagged", r.flagged}});
    }
    j["dropped"] = json::array();
    for (const auto& [rel, reason] : dropped)
        j["dropped"].push_back({{"relation_id", rel}, {"reason", reason}});
    return j.dump(2) + "\n";
}

std::vector<std::string> write_build(const BuildResult& result, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    auto write_atomic = [&](const fs::path& path, const std::string& content) {
        const fs::path tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write " + tmp.string());
            out << content;
        }
        fs::rename(tmp, path);
        written.push_back(path.string());
    };

    for (const auto& ds : result.datasets) {
        std::ostringstream body;
        write_facts_jsonl(body, ds.train);
        write_mc_facts_jsonl(body, ds.test);
        write_atomic(fs::path(out_dir) / (sanitize_filename(ds.relation_id) + ".jsonl"),
                     body.str());
    }
    write_atomic(fs::path(out_dir) / "manifest.json", result.manifest.to_json());
    return written;
}

BuildResult read_build(const std::string& dir) {
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    std::ifstream min(manifest_path);
    if (!min) throw ParseError("missing manifest: " + manifest_path.string());
    json j = json::parse(min);

    BuildResult result;
    result.manifest.seed = j.at("seed").get<std::uint64_t>();
    result.manifest.min_facts = j.at("thresholds").at("min_facts").get<std::size_t>();
    result.manifest.min_unique_objects =
        j.at("thresholds").at("min_unique_objects").get<std::size_t>();
    result.manifest.m = j.at("m").get<std::size_t>();
    result.manifest.n_train = j.at("n_train").get<std::size_t>();
    for (const auto& r : j.at("relations")) {
        RelationReport rep;
        rep.relation_id = r.at("relation_id").get<std::string>();
        rep.train_count = r.at("train_count").get<std::size_t>();
        rep.test_count = r.at("test_count").get<std::size_t>();
        rep.sampling_failures = r.at("sampling_failures").get<std::size_t>();
        rep.flagged = r.at("flagged").get<bool>();
        result.manifest.relations.push_back(rep);

        const fs::path file = fs::path(dir) / (sanitize_filename(rep.relation_id) + ".jsonl");
        std::ifstream in(file);
        if (!in) throw ParseError("missing relation file: " + file.string());
        RelationDataset ds;
        ds.relation_id = rep.relation_id;
        std::string line;
        long lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            json row = json::parse(line);
            if (row.contains("alternatives")) {
                std::istringstream one(line);
                auto mc = load_mc_facts(one);
                ds.test.push_back(std::move(mc.front()));
            } else {
                ds.train.push_back(Fact{row.at("subject").get<std::string>(),
                                        row.at("relation").get<std::string>(),
                                        row.at("object").get<std::string>()});
            }
        }
        result.datasets.push_back(std::move(ds));
    }
    for (const auto& d : j.at("dropped"))
        result.manifest.dropped.emplace_back(d.at("relation_id").get<std::string>(),
                                             d.at("reason").get<std::string>());
    return result;
}

}  // namespace zplke

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "zplke/facts.hpp"

namespace zplke {

struct BuildConfig {
    std::size_t min_facts = 500;
    std::size_t min_unique_objects = 100;
    std::size_t m = 99;        // alternatives per test fact
    std::size_t n_train = 0;   // training facts per relation (0: keep every fact testable minus 1)
    std::uint64_t seed = 0;
    // Relations where more than this fraction of test facts fail the
    // multi-correct exclusion are flagged in the manifest.
    double flag_failure_fraction = 0.01;
};

struct RelationReport {
    std::string relation_id;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    std::size_t sampling_failures = 0;
    bool flagged = false;  // failure fraction above the threshold
};

struct BuildManifest {
    std::uint64_t seed = 0;
    std::size_t min_facts = 0;
    std::size_t min_unique_objects = 0;
    std::size_t m = 0;
    std::size_t n_train = 0;
    std::vector<RelationReport> relations;                       // by relation_id
    std::vector<std::pair<std::string, std::string>> dropped;    // (relation_id, reason)

    std::string to_json() const;  // stable key order, no timestamps
};

struct BuildResult {
    std::vector<RelationDataset> datasets;  // ordered by relation_id
    BuildManifest manifest;
};

// Relations with at least min_facts facts and min_unique_objects distinct
// objects, sorted by relation_id. Objects are counted as given (canonicalize
// upstream when an alias map applies).
std::vector<std::string> filter_relations(const std::vector<Fact>& corpus,
                                          std::size_t min_facts = 500,
                                          std::size_t min_unique_objects = 100);

// Draws m alternatives uniformly without replacement from the distinct
// objects of relation_pool, excluding every correct object the index lists
// for this subject. The RNG stream is derived from
// (seed, relation_id, subject, object) so one fact's draw never perturbs
// another's. Throws SamplingError naming the relation and shortfall.
MultipleChoiceFact sample_alternatives(
    const Fact& fact, const std::vector<Fact>& relation_pool, std::size_t m,
    const std::map<std::string, std::set<std::string>>& subject_objects_index,
    std::uint64_t seed);

// Full benchmark build: canonicalize via alias_map, filter relations, split
// each into train/test, and sample alternatives for every test fact.
BuildResult build_mc_dataset(const std::vector<Fact>& corpus, const BuildConfig& config,
                             const std::map<std::string, std::string>& alias_map = {});

// Writes one JSONL per relation plus manifest.json into out_dir. Returns the
// written file paths (deterministic content; rebuilds are byte-identical).
std::vector<std::string> write_build(const BuildResult& result, const std::string& out_dir);

// Reads back a directory written by write_build.
BuildResult read_build(const std::string& dir);

}  // namespace zplke

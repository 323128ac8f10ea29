#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "zplke/dataset_builder.hpp"
#include "zplke/errors.hpp"

using namespace zplke;
namespace fs = std::filesystem;

namespace {

std::vector<Fact> synthetic_corpus() {
    std::vector<Fact> corpus;
    // Two relations that pass the filters, one too small, one with too few
    // distinct objects.
    for (int i = 0; i < 40; ++i)
        corpus.push_back(Fact{"person" + std::to_string(i), "birth-year",
                              std::to_string(1850 + i)});
    for (int i = 0; i < 40; ++i)
        corpus.push_back(Fact{"city" + std::to_string(i), "founded-in",
                              std::to_string(1000 + i)});
    for (int i = 0; i < 3; ++i)
        corpus.push_back(Fact{"x" + std::to_string(i), "tiny", std::to_string(i)});
    for (int i = 0; i < 40; ++i)
        corpus.push_back(Fact{"thing" + std::to_string(i), "binary-prop", i % 2 ? "yes" : "no"});
    return corpus;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("zplke_test_" + tag + "_" +
                                            std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("relation filter enforces both thresholds and sorts the output") {
    const auto corpus = synthetic_corpus();
    const auto rels = filter_relations(corpus, 10, 20);
    CHECK(rels == std::vector<std::string>{"birth-year", "founded-in"});
    // binary-prop has 40 facts but only 2 distinct objects.
    CHECK(filter_relations(corpus, 10, 2) ==
          std::vector<std::string>{"binary-prop", "birth-year", "founded-in"});
    CHECK(filter_relations(corpus, 41, 2).empty());
}

TEST_CASE("alternatives are distinct, exclude every correct object, and reproduce") {
    std::vector<Fact> pool;
    for (int i = 0; i < 50; ++i)
        pool.push_back(Fact{"s" + std::to_string(i), "r", "o" + std::to_string(i)});
    std::map<std::string, std::set<std::string>> index;
    index["s0"] = {"o0", "o1", "o2"};  // s0 has three valid objects

    const auto mc = sample_alternatives(pool[0], pool, 10, index, 7);
    CHECK(mc.subject == "s0");
    CHECK(mc.correct_object == "o0");
    REQUIRE(mc.m() == 10);
    std::set<std::string> alts(mc.alternatives.begin(), mc.alternatives.end());
    CHECK(alts.size() == 10);
    CHECK(!alts.count("o0"));
    CHECK(!alts.count("o1"));
    CHECK(!alts.count("o2"));

    const auto again = sample_alternatives(pool[0], pool, 10, index, 7);
    CHECK(again.alternatives == mc.alternatives);
    const auto other_seed = sample_alternatives(pool[0], pool, 10, index, 8);
    CHECK(other_seed.alternatives != mc.alternatives);
}

TEST_CASE("per-fact streams are independent of draw order") {
    std::vector<Fact> pool;
    for (int i = 0; i < 30; ++i)
        pool.push_back(Fact{"s" + std::to_string(i), "r", "o" + std::to_string(i)});
    std::map<std::string, std::set<std::string>> index;
    const auto alone = sample_alternatives(pool[5], pool, 8, index, 3);
    // Drawing other facts first must not shift this fact's alternatives.
    (void)sample_alternatives(pool[0], pool, 8, index, 3);
    (void)sample_alternatives(pool[1], pool, 8, index, 3);
    const auto after = sample_alternatives(pool[5], pool, 8, index, 3);
    CHECK(after.alternatives == alone.alternatives);
}

TEST_CASE("sampling shortfall is reported with the relation") {
    std::vector<Fact> pool;
    for (int i = 0; i < 5; ++i)
        pool.push_back(Fact{"s" + std::to_string(i), "r", "o" + std::to_string(i)});
    std::map<std::string, std::set<std::string>> index;
    try {
        sample_alternatives(pool[0], pool, 10, index, 0);
        FAIL("expected SamplingError");
    } catch (const SamplingError& e) {
        CHECK(e.relation_id() == "r");
        CHECK(e.shortfall() == 6);  // 4 eligible, 10 requested
    }
}

TEST_CASE("end-to-end build splits each kept relation and drops the rest") {
    BuildConfig cfg;
    cfg.min_facts = 10;
    cfg.min_unique_objects = 20;
    cfg.m = 5;
    cfg.n_train = 8;
    cfg.seed = 11;
    const auto result = build_mc_dataset(synthetic_corpus(), cfg);

    REQUIRE(result.datasets.size() == 2);
    CHECK(result.datasets[0].relation_id == "birth-year");
    CHECK(result.datasets[1].relation_id == "founded-in");
    for (const auto& ds : result.datasets) {
        CHECK(ds.train.size() == 8);
        CHECK(ds.test.size() == 32);
        std::set<std::string> train_subjects;
        for (const auto& f : ds.train) train_subjects.insert(f.subject);
        for (const auto& t : ds.test) {
            CHECK(!train_subjects.count(t.subject));
            CHECK(t.m() == 5);
        }
    }
    REQUIRE(result.manifest.relations.size() == 2);
    CHECK(result.manifest.relations[0].train_count == 8);
    CHECK(result.manifest.relations[0].test_count == 32);
    CHECK(result.manifest.relations[0].sampling_failures == 0);
    CHECK(!result.manifest.relations[0].flagged);
    CHECK(result.manifest.dropped.empty());  // small relations never reach the split
}

TEST_CASE("relations whose split cannot reach n_train are dropped with a reason") {
    std::vector<Fact> corpus;
    for (int i = 0; i < 12; ++i)
        corpus.push_back(Fact{"s" + std::to_string(i), "r", "o" + std::to_string(i)});
    BuildConfig cfg;
    cfg.min_facts = 5;
    cfg.min_unique_objects = 5;
    cfg.m = 3;
    cfg.n_train = 12;
    const auto result = build_mc_dataset(corpus, cfg);
    CHECK(result.datasets.empty());
    REQUIRE(result.manifest.dropped.size() == 1);
    CHECK(result.manifest.dropped[0].first == "r");
}

TEST_CASE("subjects with many objects can fail sampling and flag the relation") {
    std::vector<Fact> corpus;
    // One subject owns 20 of the 26 distinct objects; its test facts can only
    // draw from the remaining 6, below m=10.
    for (int i = 0; i < 20; ++i)
        corpus.push_back(Fact{"multi", "r", "m" + std::to_string(i)});
    for (int i = 0; i < 6; ++i)
        corpus.push_back(Fact{"s" + std::to_string(i), "r", "p" + std::to_string(i)});
    BuildConfig cfg;
    cfg.min_facts = 10;
    cfg.min_unique_objects = 5;
    cfg.m = 10;
    cfg.n_train = 1;
    const auto result = build_mc_dataset(corpus, cfg);
    REQUIRE(result.manifest.relations.size() == 1);
    const auto& report = result.manifest.relations[0];
    CHECK(report.sampling_failures == 20);
    CHECK(report.test_count == 5);
    CHECK(report.flagged);
    // The surviving test facts all belong to single-object subjects.
    for (const auto& t : result.datasets[0].test) CHECK(t.subject != "multi");
}

TEST_CASE("a relation whose test facts all fail sampling is dropped") {
    std::vector<Fact> corpus;
    for (int i = 0; i < 6; ++i) corpus.push_back(Fact{"a", "r", "oa" + std::to_string(i)});
    for (int i = 0; i < 6; ++i) corpus.push_back(Fact{"b", "r", "ob" + std::to_string(i)});
    BuildConfig cfg;
    cfg.min_facts = 10;
    cfg.min_unique_objects = 5;
    cfg.m = 10;  // heldout subject sees only 6 eligible objects
    cfg.n_train = 6;
    const auto result = build_mc_dataset(corpus, cfg);
    CHECK(result.datasets.empty());
    REQUIRE(result.manifest.dropped.size() == 1);
    CHECK(result.manifest.dropped[0].second == "every test fact failed alternative sampling");
}

TEST_CASE("alias map canonicalizes objects before filtering and sampling") {
    std::vector<Fact> corpus;
    for (int i = 0; i < 10; ++i)
        corpus.push_back(Fact{"s" + std::to_string(i), "r", "o" + std::to_string(i)});
    // Two rows that collapse onto existing triples once aliases apply.
    corpus.push_back(Fact{"s0", "r", "alias-of-o0"});
    corpus.push_back(Fact{"s1", "r", "alias-of-o1"});
    std::map<std::string, std::string> aliases{{"alias-of-o0", "o0"}, {"alias-of-o1", "o1"}};

    BuildConfig cfg;
    cfg.min_facts = 5;
    cfg.min_unique_objects = 5;
    cfg.m = 4;
    cfg.n_train = 2;
    const auto result = build_mc_dataset(corpus, cfg, aliases);
    REQUIRE(result.datasets.size() == 1);
    const auto& ds = result.datasets[0];
    CHECK(ds.train.size() + ds.test.size() == 10);  // duplicates collapsed
    for (const auto& t : ds.test) {
        CHECK(t.correct_object.rfind("alias", 0) == std::string::npos);
        for (const auto& a : t.alternatives) CHECK(a.rfind("alias", 0) == std::string::npos);
    }
    CHECK(ds.alias_map == aliases);
}

TEST_CASE("build rejects empty corpus and zero training size") {
    BuildConfig cfg;
    cfg.n_train = 1;
    CHECK_THROWS_AS(build_mc_dataset({}, cfg), ValidationError);
    cfg.n_train = 0;
    CHECK_THROWS_AS(build_mc_dataset(synthetic_corpus(), cfg), ValidationError);
}

TEST_CASE("write and read round-trip, and rebuilds are byte-identical") {
    BuildConfig cfg;
    cfg.min_facts = 10;
    cfg.min_unique_objects = 20;
    cfg.m = 5;
    cfg.n_train = 8;
    cfg.seed = 21;
    const auto result = build_mc_dataset(synthetic_corpus(), cfg);

    TempDir dir_a("build_a"), dir_b("build_b");
    const auto files_a = write_build(result, dir_a.path.string());
    CHECK(files_a.size() == result.datasets.size() + 1);  // one per relation plus manifest

    const auto again = build_mc_dataset(synthetic_corpus(), cfg);
    const auto files_b = write_build(again, dir_b.path.string());
    REQUIRE(files_a.size() == files_b.size());
    for (std::size_t i = 0; i < files_a.size(); ++i)
        CHECK(slurp(files_a[i]) == slurp(files_b[i]));

    const auto loaded = read_build(dir_a.path.string());
    REQUIRE(loaded.datasets.size() == result.datasets.size());
    for (std::size_t i = 0; i < loaded.datasets.size(); ++i) {
        CHECK(loaded.datasets[i].relation_id == result.datasets[i].relation_id);
        CHECK(loaded.datasets[i].train == result.datasets[i].train);
        CHECK(loaded.datasets[i].test == result.datasets[i].test);
    }
    CHECK(loaded.manifest.to_json() == result.manifest.to_json());
}

TEST_CASE("relation ids are sanitized into safe file names") {
    std::vector<Fact> corpus;
    for (int i = 0; i < 10; ++i)
        corpus.push_back(Fact{"s" + std::to_string(i), "capital of/country",
                              "o" + std::to_string(i)});
    BuildConfig cfg;
    cfg.min_facts = 5;
    cfg.min_unique_objects = 5;
    cfg.m = 4;
    cfg.n_train = 2;
    const auto result = build_mc_dataset(corpus, cfg);
    TempDir dir("sanitize");
    const auto files = write_build(result, dir.path.string());
    for (const auto& f : files) {
        const auto name = fs::path(f).filename().string();
        CHECK(name.find('/') == std::string::npos);
        CHECK(name.find(' ') == std::string::npos);
    }
    const auto loaded = read_build(dir.path.string());
    REQUIRE(loaded.datasets.size() == 1);
    CHECK(loaded.datasets[0].relation_id == "capital of/country");
}

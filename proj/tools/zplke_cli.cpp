// zplke: latent factual knowledge estimation for causal language models.
//
// Subcommands: build-dataset, eval, perturb-study, min-n, analyze, export.
// Exit codes: 0 success, 2 config error, 3 backend error, 4 data error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "zplke/analysis.hpp"
#include "zplke/dataset_builder.hpp"
#include "zplke/errors.hpp"
#include "zplke/evaluator.hpp"
#include "zplke/facts.hpp"
#include "zplke/mock_lm.hpp"
#include "zplke/remote_lm.hpp"
#include "zplke/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace zplke;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;
constexpr int kExitData = 4;

void write_atomic(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_run_manifest(const fs::path& out_dir, const std::string& subcommand,
                        const std::string& effective_config,
                        const std::vector<std::uint64_t>& seeds, const std::string& backend_id,
                        const std::vector<std::string>& outputs) {
    json j;
    j["subcommand"] = subcommand;
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(hash_bytes(effective_config)));
    j["config_hash"] = std::string("fnv1a64:") + hex;
    j["config"] = effective_config;
    j["seeds"] = seeds;
    j["backend"] = backend_id;
    j["timestamp"] = iso8601_now();
    j["outputs"] = outputs;
    write_atomic(out_dir / "run_manifest.json", j.dump(2) + "\n");
}

std::map<std::string, std::string> load_alias_map(const std::string& path) {
    std::map<std::string, std::string> out;
    if (path.empty()) return out;
    json j = json::parse(read_file(path));
    for (const auto& [k, v] : j.items())
        out[canonicalize_text(k)] = canonicalize_text(v.get<std::string>());
    return out;
}

MockOracleLM::Config mock_config_from_json(const json& j) {
    MockOracleLM::Config cfg;
    if (j.contains("model_id")) cfg.model_id = j["model_id"].get<std::string>();
    if (j.contains("n_ramp")) cfg.n_ramp = j["n_ramp"].get<std::size_t>();
    if (j.contains("p_max")) cfg.p_max = j["p_max"].get<double>();
    if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
    if (j.contains("tie_jitter")) cfg.tie_jitter = j["tie_jitter"].get<double>();
    if (j.contains("confusion_set"))
        for (const auto& w : j["confusion_set"]) cfg.confusion_set.push_back(w.get<std::string>());
    if (j.contains("knowledge")) {
        for (const auto& [subject, entry] : j["knowledge"].items()) {
            MockOracleLM::KnowledgeEntry e;
            e.object = entry.at("object").get<std::string>();
            if (entry.contains("known")) e.known = entry["known"].get<bool>();
            if (entry.contains("ramp")) e.ramp = entry["ramp"].get<std::size_t>();
            cfg.knowledge[subject] = std::move(e);
        }
    }
    return cfg;
}

// Default mock for a dataset: every fact is known, confusion set covers all
// object words so alternatives stay scoreable.
MockOracleLM::Config mock_config_for(const std::vector<RelationDataset>& datasets) {
    MockOracleLM::Config cfg;
    std::set<std::string> confusion;
    auto add_words = [&confusion](const std::string& text) {
        std::string w;
        for (char c : text + " ") {
            if (c == ' ') {
                if (!w.empty()) confusion.insert(w);
                w.clear();
            } else {
                w += c;
            }
        }
    };
    for (const auto& ds : datasets) {
        for (const auto& f : ds.train) {
            cfg.knowledge[f.subject] = {f.object, true, std::nullopt};
            add_words(f.object);
        }
        for (const auto& f : ds.test) {
            cfg.knowledge[f.subject] = {f.correct_object, true, std::nullopt};
            add_words(f.correct_object);
            for (const auto& a : f.alternatives) add_words(a);
        }
    }
    cfg.confusion_set.assign(confusion.begin(), confusion.end());
    return cfg;
}

std::vector<RelationDataset> load_datasets(const std::string& data_path) {
    std::vector<RelationDataset> datasets;
    if (fs::is_directory(data_path)) {
        return read_build(data_path).datasets;
    }
    // A single relation JSONL (train rows + multiple-choice rows).
    std::ifstream in(data_path);
    if (!in) throw ParseError("cannot open " + data_path);
    RelationDataset ds;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json row = json::parse(line);
        if (row.contains("alternatives")) {
            std::istringstream one(line);
            ds.test.push_back(load_mc_facts(one).front());
        } else {
            ds.train.push_back(Fact{canonicalize_text(row.at("subject").get<std::string>()),
                                    canonicalize_text(row.at("relation").get<std::string>()),
                                    canonicalize_text(row.at("object").get<std::string>())});
        }
    }
    if (!ds.train.empty())
        ds.relation_id = ds.train.front().relation_id;
    else if (!ds.test.empty())
        ds.relation_id = ds.test.front().relation_id;
    datasets.push_back(std::move(ds));
    return datasets;
}

struct BackendChoice {
    std::unique_ptr<ScoringBackend> backend;
};

BackendChoice make_backend(const std::string& kind, const std::string& mock_config_path,
                           const std::string& model,
                           const std::vector<RelationDataset>& datasets) {
    BackendChoice choice;
    if (kind == "mock") {
        MockOracleLM::Config cfg;
        if (!mock_config_path.empty())
            cfg = mock_config_from_json(json::parse(read_file(mock_config_path)));
        else
            cfg = mock_config_for(datasets);
        if (!model.empty()) cfg.model_id = model;
        choice.backend = std::make_unique<MockOracleLM>(std::move(cfg));
    } else if (kind == "remote") {
        RemoteBackend::Config cfg;
        const char* base = std::getenv("ZPLKE_API_BASE");
        const char* key = std::getenv("ZPLKE_API_KEY");
        if (!base) throw ConfigError("remote backend requires ZPLKE_API_BASE");
        cfg.base_url = base;
        if (key) cfg.api_key = key;
        cfg.model = model.empty() ? "default" : model;
        choice.backend = std::make_unique<RemoteBackend>(std::move(cfg));
    } else {
        throw ConfigError("unknown backend kind: " + kind);
    }
    return choice;
}

std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-prompt latent knowledge estimation toolkit"};
    app.require_subcommand(1);

    // Single key/value config file with one [section] per subcommand;
    // explicit flags override config values.
    app.set_config("--config", "", "Run-configuration file (INI sections per subcommand)");

    // ---- build-dataset ----
    auto* build = app.add_subcommand("build-dataset", "Compile a fact corpus into an MC benchmark");
    std::string corpus_path, alias_path, out_dir = "out";
    BuildConfig bcfg;
    build->add_option("--corpus", corpus_path, "Fact corpus (.tsv or .jsonl)");
    build->add_option("--alias-map", alias_path, "JSON object: surface form -> canonical form");
    build->add_option("--min-facts", bcfg.min_facts, "Relation fact threshold");
    build->add_option("--min-unique-objects", bcfg.min_unique_objects, "Distinct object threshold");
    build->add_option("--m", bcfg.m, "Alternatives per test fact");
    build->add_option("--n-train", bcfg.n_train, "Training facts per relation");
    build->add_option("--seed", bcfg.seed, "Build seed");
    build->add_option("--out", out_dir, "Output directory");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "Multiple-choice evaluation over a dataset");
    std::string data_path, backend_kind = "mock", mock_config_path, model_name;
    std::size_t eval_n = 50, seed_count = 1, parallel = 4;
    std::uint64_t base_seed = 0;
    std::string separator = " ";
    eval->add_option("--data", data_path, "Dataset directory (with manifest) or relation JSONL");
    eval->add_option("--backend", backend_kind, "mock or remote");
    eval->add_option("--mock-config", mock_config_path, "Mock oracle JSON config");
    eval->add_option("--model", model_name, "Model identifier");
    eval->add_option("--n", eval_n, "In-context example count");
    eval->add_option("--seeds", seed_count, "Number of seeds (base_seed..base_seed+k-1)");
    eval->add_option("--seed", base_seed, "Base seed");
    eval->add_option("--separator", separator, "Separator between subjects and objects");
    eval->add_option("--parallel", parallel, "Parallel scoring bound");
    eval->add_option("--out", out_dir, "Output directory");

    // ---- perturb-study ----
    auto* perturb = app.add_subcommand("perturb-study", "Per-position probabilities under injections");
    std::string kind_str = "unknown", placement_str = "distributed", unknown_pool_path;
    std::size_t perturb_count = 0;
    perturb->add_option("--data", data_path, "Dataset directory or relation JSONL");
    perturb->add_option("--backend", backend_kind, "mock or remote");
    perturb->add_option("--mock-config", mock_config_path, "Mock oracle JSON config");
    perturb->add_option("--model", model_name, "Model identifier");
    perturb->add_option("--kind", kind_str, "unknown or incorrect");
    perturb->add_option("--placement", placement_str, "distributed or continuous");
    perturb->add_option("--count", perturb_count, "Number of replaced examples");
    perturb->add_option("--unknown-pool", unknown_pool_path, "Fact file for unknown replacements");
    perturb->add_option("--n", eval_n, "In-context example count");
    perturb->add_option("--seed", base_seed, "Seed");
    perturb->add_option("--separator", separator, "Separator");
    perturb->add_option("--out", out_dir, "Output directory");

    // ---- min-n ----
    auto* minn = app.add_subcommand("min-n", "Minimum examples for stable accuracy");
    std::string accuracy_csv;
    double fraction = 0.95;
    std::size_t reference_n = 50;
    minn->add_option("--accuracy-csv", accuracy_csv, "CSV from eval (model_id,n,seed,accuracy)");
    minn->add_option("--fraction", fraction, "Stability fraction");
    minn->add_option("--reference-n", reference_n, "Reference example count");
    minn->add_option("--out", out_dir, "Output directory");

    // ---- analyze ----
    auto* analyze = app.add_subcommand("analyze", "Cross-model subsumption, correlations, rankings");
    std::vector<std::string> record_files;
    std::string family_map_path;
    analyze->add_option("--records", record_files, "EvalRecord JSONL files (one per model)");
    analyze->add_option("--family-map", family_map_path, "JSON object: model_id -> family");
    analyze->add_option("--out", out_dir, "Output directory");

    // ---- export ----
    auto* exp = app.add_subcommand("export", "Re-emit results from a run directory");
    std::string results_dir, format = "csv";
    exp->add_option("--results", results_dir, "Directory containing run_manifest.json");
    exp->add_option("--format", format, "csv, jsonl, or plotdata");
    exp->add_option("--out", out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        const fs::path out(out_dir);

        if (build->parsed()) {
            if (corpus_path.empty()) throw ConfigError("build-dataset requires --corpus");
            const auto corpus = load_facts_file(corpus_path);
            const auto alias = load_alias_map(alias_path);
            const auto result = build_mc_dataset(corpus.facts, bcfg, alias);
            auto written = write_build(result, out_dir);
            for (const auto& [rel, reason] : result.manifest.dropped)
                std::cerr << "dropped relation " << rel << ": " << reason << "\n";
            write_run_manifest(out, "build-dataset",
                               "corpus=" + corpus_path + ";seed=" + std::to_string(bcfg.seed) +
                                   ";m=" + std::to_string(bcfg.m) +
                                   ";n_train=" + std::to_string(bcfg.n_train),
                               {bcfg.seed}, "none", written);
            return kExitOk;
        }

        if (eval->parsed()) {
            if (data_path.empty()) throw ConfigError("eval requires --data");
            const auto datasets = load_datasets(data_path);
            auto choice = make_backend(backend_kind, mock_config_path, model_name, datasets);
            EvalRunConfig cfg;
            cfg.n = eval_n;
            cfg.separator = separator;
            cfg.parallelism = parallel;
            cfg.seeds.clear();
            for (std::size_t i = 0; i < seed_count; ++i) cfg.seeds.push_back(base_seed + i);

            std::vector<EvalRecord> all_records;
            std::vector<std::string> failures;
            std::map<std::uint64_t, std::pair<std::size_t, std::size_t>> per_seed;  // correct,total
            for (const auto& ds : datasets) {
                const auto run = run_eval(*choice.backend, ds, cfg);
                for (const auto& r : run.records) {
                    auto& [c, t] = per_seed[r.seed];
                    ++t;
                    if (r.correct) ++c;
                }
                all_records.insert(all_records.end(), run.records.begin(), run.records.end());
                failures.insert(failures.end(), run.failed_facts.begin(), run.failed_facts.end());
            }
            // Individual facts may fail without sinking the run, but a run
            // where nothing scored has no result to report.
            if (all_records.empty() && !failures.empty())
                throw BackendError("no fact could be scored; first failure: " + failures.front(),
                                   1);
            std::sort(all_records.begin(), all_records.end(),
                      [](const EvalRecord& a, const EvalRecord& b) {
                          return std::tie(a.seed, a.fact_id) < std::tie(b.seed, b.fact_id);
                      });
            std::ostringstream records_body;
            write_records_jsonl(records_body, all_records);
            write_atomic(out / "records.jsonl", records_body.str());

            std::vector<std::tuple<std::string, std::size_t, std::uint64_t, double>> rows;
            for (const auto& [seed, ct] : per_seed)
                rows.emplace_back(choice.backend->model_id(), eval_n, seed,
                                  static_cast<double>(ct.first) / static_cast<double>(ct.second));
            std::ostringstream acc_body;
            write_accuracy_csv(acc_body, rows);
            write_atomic(out / "accuracy.csv", acc_body.str());
            if (!failures.empty()) {
                std::string body;
                for (const auto& f : failures) body += f + "\n";
                write_atomic(out / "failed_facts.txt", body);
            }
            write_run_manifest(out, "eval",
                               "data=" + data_path + ";backend=" + backend_kind +
                                   ";n=" + std::to_string(eval_n) + ";separator=" + separator,
                               cfg.seeds, choice.backend->model_id(),
                               {(out / "records.jsonl").string(), (out / "accuracy.csv").string()});
            return kExitOk;
        }

        if (perturb->parsed()) {
            if (data_path.empty()) throw ConfigError("perturb-study requires --data");
            const auto datasets = load_datasets(data_path);
            if (datasets.empty() || datasets.front().train.empty())
                throw ValidationError("perturb-study needs a dataset with train facts");
            const auto& ds = datasets.front();
            auto choice = make_backend(backend_kind, mock_config_path, model_name, datasets);

            PerturbationSpec spec;
            spec.kind = kind_str == "incorrect" ? PerturbationKind::incorrect
                                                : PerturbationKind::unknown;
            if (kind_str != "incorrect" && kind_str != "unknown")
                throw ConfigError("--kind must be unknown or incorrect");
            spec.placement = placement_str == "continuous" ? Placement::continuous
                                                           : Placement::distributed;
            if (placement_str != "continuous" && placement_str != "distributed")
                throw ConfigError("--placement must be distributed or continuous");
            spec.count = perturb_count;
            spec.seed = base_seed;
            if (spec.kind == PerturbationKind::unknown) {
                if (unknown_pool_path.empty())
                    throw ConfigError("kind=unknown requires --unknown-pool");
                spec.replacement_pool = load_facts_file(unknown_pool_path).facts;
            }

            SeededRng rng(derive_seed(base_seed, {ds.relation_id, "perturb-study"}));
            std::vector<Fact> examples = ds.train;
            if (eval_n < examples.size()) {
                rng.shuffle(examples);
                examples.resize(eval_n);
            }
            const auto perturbed = apply_perturbation(examples, spec);
            const std::string query =
                ds.test.empty() ? examples.front().subject : ds.test.front().subject;
            const auto seq = build_sequence(perturbed.examples, query, separator);
            const auto probs = per_position_object_probabilities(*choice.backend, seq);

            std::set<std::size_t> replaced(perturbed.replaced_positions.begin(),
                                           perturbed.replaced_positions.end());
            std::ostringstream csv;
            csv << "position,subject,object,replaced,joint_logprob,prob\n";
            for (const auto& p : probs) {
                const auto& f = perturbed.examples[p.position];
                csv << p.position << ',' << f.subject << ',' << f.object << ','
                    << (replaced.count(p.position) ? 1 : 0) << ','
                    << format_double(p.joint_logprob) << ','
                    << format_double(std::exp(p.joint_logprob)) << '\n';
            }
            write_atomic(out / "per_position.csv", csv.str());
            write_atomic(out / "perturbation.json", spec.to_json() + "\n");
            write_run_manifest(out, "perturb-study",
                               "data=" + data_path + ";kind=" + kind_str + ";placement=" +
                                   placement_str + ";count=" + std::to_string(perturb_count),
                               {base_seed}, choice.backend->model_id(),
                               {(out / "per_position.csv").string()});
            return kExitOk;
        }

        if (minn->parsed()) {
            if (accuracy_csv.empty()) throw ConfigError("min-n requires --accuracy-csv");
            std::ifstream in(accuracy_csv);
            if (!in) throw ParseError("cannot open " + accuracy_csv);
            std::string line;
            std::getline(in, line);  // header
            std::map<std::size_t, std::vector<double>> by_n;
            std::string model_id;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                std::istringstream row(line);
                std::string model, n_s, seed_s, acc_s;
                std::getline(row, model, ',');
                std::getline(row, n_s, ',');
                std::getline(row, seed_s, ',');
                std::getline(row, acc_s, ',');
                model_id = model;
                by_n[std::stoul(n_s)].push_back(std::stod(acc_s));
            }
            AccuracyCurve curve;
            curve.model_id = model_id;
            for (const auto& [n, accs] : by_n) {
                AccuracyPoint p;
                for (double a : accs) p.mean += a;
                p.mean /= static_cast<double>(accs.size());
                double var = 0.0;
                for (double a : accs) var += (a - p.mean) * (a - p.mean);
                p.stddev = std::sqrt(var / static_cast<double>(accs.size()));
                curve.points[n] = p;
            }
            const auto n_star = min_examples_for_stability(curve, fraction, reference_n);
            json j;
            j["model_id"] = model_id;
            j["fraction"] = fraction;
            j["reference_n"] = reference_n;
            j["n_star"] = n_star ? json(*n_star) : json(nullptr);
            write_atomic(out / "min_n.json", j.dump(2) + "\n");
            std::cout << j.dump() << "\n";
            write_run_manifest(out, "min-n", "accuracy_csv=" + accuracy_csv, {}, "none",
                               {(out / "min_n.json").string()});
            return kExitOk;
        }

        if (analyze->parsed()) {
            if (record_files.empty()) throw ConfigError("analyze requires --records");
            if (family_map_path.empty()) throw ConfigError("analyze requires --family-map");
            std::map<std::string, std::string> family_map;
            const json fam_json = json::parse(read_file(family_map_path));
            for (const auto& [k, v] : fam_json.items()) family_map[k] = v.get<std::string>();

            std::vector<KnowledgeProfile> profiles;
            std::set<std::string> universe;
            std::map<std::string, double> overall_accuracy;
            for (const auto& file : record_files) {
                std::ifstream in(file);
                if (!in) throw ParseError("cannot open " + file);
                const auto records = read_records_jsonl(in);
                if (records.empty()) throw ValidationError("no records in " + file);
                const std::string model = records.front().model_id;
                profiles.push_back(profile_from_records(model, records));
                overall_accuracy[model] = accuracy(records);
                for (const auto& r : records) universe.insert(r.fact_id);
            }

            // Subsumption per family between its lowest- and highest-accuracy
            // models.
            std::map<std::string, std::vector<const KnowledgeProfile*>> grouped;
            for (const auto& p : profiles) grouped[family_map.at(p.model_id)].push_back(&p);
            std::vector<EtaRow> eta_rows;
            for (const auto& [family, members] : grouped) {
                if (members.size() < 2) continue;
                const KnowledgeProfile* small = members.front();
                const KnowledgeProfile* large = members.front();
                for (const auto* m : members) {
                    if (overall_accuracy[m->model_id] < overall_accuracy[small->model_id]) small = m;
                    if (overall_accuracy[m->model_id] > overall_accuracy[large->model_id]) large = m;
                }
                EtaRow row;
                row.family = family;
                row.small_model = small->model_id;
                row.small_acc = overall_accuracy[small->model_id];
                row.large_model = large->model_id;
                row.large_acc = overall_accuracy[large->model_id];
                row.eta = subsumption_rate(*small, *large, universe);
                eta_rows.push_back(std::move(row));
            }
            std::ostringstream eta_body;
            write_eta_csv(eta_body, eta_rows);
            write_atomic(out / "eta.csv", eta_body.str());

            const auto matrix = family_average_correlation(profiles, family_map);
            std::ostringstream matrix_body;
            write_family_matrix_csv(matrix_body, matrix);
            write_atomic(out / "family_correlation.csv", matrix_body.str());

            const auto ranking = rank_relations(profiles);
            std::ostringstream ranking_body;
            write_ranking_csv(ranking_body, ranking);
            write_atomic(out / "relation_ranking.csv", ranking_body.str());

            std::string cfg_str = "records=";
            for (const auto& f : record_files) cfg_str += f + ",";
            write_run_manifest(out, "analyze", cfg_str, {}, "none",
                               {(out / "eta.csv").string(),
                                (out / "family_correlation.csv").string(),
                                (out / "relation_ranking.csv").string()});
            return kExitOk;
        }

        if (exp->parsed()) {
            if (results_dir.empty()) throw ConfigError("export requires --results");
            const fs::path manifest = fs::path(results_dir) / "run_manifest.json";
            if (!fs::exists(manifest))
                throw ValidationError("results directory lacks run_manifest.json");
            std::vector<std::string> outputs;
            const fs::path records_path = fs::path(results_dir) / "records.jsonl";
            if (format == "jsonl") {
                if (fs::exists(records_path)) {
                    write_atomic(out / "records.jsonl", read_file(records_path));
                    outputs.push_back((out / "records.jsonl").string());
                }
            } else if (format == "csv") {
                for (const auto& entry : fs::directory_iterator(results_dir)) {
                    if (entry.path().extension() == ".csv") {
                        write_atomic(out / entry.path().filename(), read_file(entry.path()));
                        outputs.push_back((out / entry.path().filename()).string());
                    }
                }
            } else if (format == "plotdata") {
                // Tidy long-format CSV: series,x,y,group.
                std::ostringstream tidy;
                tidy << "series,x,y,group\n";
                const fs::path acc_path = fs::path(results_dir) / "accuracy.csv";
                if (fs::exists(acc_path)) {
                    std::istringstream in(read_file(acc_path));
                    std::string line;
                    std::getline(in, line);
                    while (std::getline(in, line)) {
                        if (line.empty()) continue;
                        std::istringstream row(line);
                        std::string model, n_s, seed_s, acc_s;
                        std::getline(row, model, ',');
                        std::getline(row, n_s, ',');
                        std::getline(row, seed_s, ',');
                        std::getline(row, acc_s, ',');
                        tidy << "accuracy," << n_s << ',' << acc_s << ',' << model << "/seed"
                             << seed_s << '\n';
                    }
                }
                const fs::path pos_path = fs::path(results_dir) / "per_position.csv";
                if (fs::exists(pos_path)) {
                    std::istringstream in(read_file(pos_path));
                    std::string line;
                    std::getline(in, line);
                    while (std::getline(in, line)) {
                        if (line.empty()) continue;
                        std::istringstream row(line);
                        std::string pos, subj, obj, repl, lp, prob;
                        std::getline(row, pos, ',');
                        std::getline(row, subj, ',');
                        std::getline(row, obj, ',');
                        std::getline(row, repl, ',');
                        std::getline(row, lp, ',');
                        std::getline(row, prob, ',');
                        tidy << "per_position," << pos << ',' << prob << ','
                             << (repl == "1" ? "replaced" : "intact") << '\n';
                    }
                }
                write_atomic(out / "plotdata.csv", tidy.str());
                outputs.push_back((out / "plotdata.csv").string());
            } else {
                throw ConfigError("unknown export format: " + format);
            }
            write_run_manifest(out, "export", "results=" + results_dir + ";format=" + format, {},
                               "none", outputs);
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const CapabilityError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const ProtocolError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}

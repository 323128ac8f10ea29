#include "zplke/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "zplke/errors.hpp"
#include "zplke/rng.hpp"

namespace zplke {

using json = nlohmann::json;

ArgmaxResult argmax_choice(const std::vector<ChoiceScore>& scores) {
    if (scores.empty()) throw ValidationError("argmax over zero choices");
    ArgmaxResult r;
    double best = scores.front().joint_logprob;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i].joint_logprob > best) {
            best = scores[i].joint_logprob;
            r.index = i;
            r.tie = false;
        } else if (scores[i].joint_logprob == best) {
            r.tie = true;
        }
    }
    return r;
}

namespace {

// Normalized linear probabilities via log-sum-exp; -inf entries get mass 0.
void fill_normalized(std::vector<ChoiceScore>& scores) {
    double max_lp = -std::numeric_limits<double>::infinity();
    for (const auto& s : scores) max_lp = std::max(max_lp, s.joint_logprob);
    if (!std::isfinite(max_lp)) {
        // Every candidate has probability zero; spread mass uniformly so the
        // normalization invariant still holds.
        for (auto& s : scores) s.normalized_prob = 1.0 / static_cast<double>(scores.size());
        return;
    }
    double z = 0.0;
    for (const auto& s : scores) z += std::exp(s.joint_logprob - max_lp);
    for (auto& s : scores)
        s.normalized_prob = std::isfinite(s.joint_logprob)
                                ? std::exp(s.joint_logprob - max_lp) / z
                                : 0.0;
}

}  // namespace

EvalRecord predict(const ScoringBackend& backend, const MultipleChoiceFact& fact,
                   const std::vector<Fact>& examples, const std::string& separator) {
    validate(fact);
    for (const auto& ex : examples) {
        if (ex.subject == fact.subject)
            throw ValidationError("query subject '" + fact.subject +
                                  "' appears among the in-context examples");
        if (ex.relation_id != fact.relation_id)
            throw ValidationError("example relation differs from the fact's relation");
    }
    const PromptSequence seq = build_sequence(examples, fact.subject, separator);

    EvalRecord rec;
    rec.fact_id = fact.id();
    rec.relation_id = fact.relation_id;
    rec.model_id = backend.model_id();
    rec.n = examples.size();

    std::vector<std::string> candidates;
    candidates.push_back(fact.correct_object);
    candidates.insert(candidates.end(), fact.alternatives.begin(), fact.alternatives.end());
    for (const auto& cand : candidates) {
        ChoiceScore cs;
        cs.object = cand;
        cs.token_scores = backend.score_continuation(seq.text, separator + cand);
        cs.joint_logprob = object_probability(cs.token_scores);
        rec.choice_scores.push_back(std::move(cs));
    }
    fill_normalized(rec.choice_scores);

    const ArgmaxResult am = argmax_choice(rec.choice_scores);
    rec.predicted_object = rec.choice_scores[am.index].object;
    rec.correct = (am.index == 0);
    rec.confidence = rec.choice_scores[am.index].normalized_prob;
    rec.degenerate_tie = am.tie;
    return rec;
}

double accuracy(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw ValidationError("accuracy over zero records is undefined");
    std::size_t correct = 0;
    for (const auto& r : records) correct += r.correct ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

bool response_test(const ScoringBackend& backend, const std::string& ground_truth,
                   const std::string& context, std::size_t k, ResponseMatch mode) {
    if (k == 0) throw ValidationError("k must be >= 1");
    const auto tokens = backend.generate_greedy(context, k);
    if (mode == ResponseMatch::substring) {
        std::string detok;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i > 0) detok += ' ';
            detok += tokens[i];
        }
        return detok.find(ground_truth) != std::string::npos;
    }
    // token_subset: every ground-truth word must appear among the tokens.
    std::vector<std::string> words;
    std::string w;
    for (char c : ground_truth + " ") {
        if (c == ' ') {
            if (!w.empty()) words.push_back(w);
            w.clear();
        } else {
            w += c;
        }
    }
    for (const auto& gw : words)
        if (std::find(tokens.begin(), tokens.end(), gw) == tokens.end()) return false;
    return true;
}

AccuracyAtK accuracy_at_k(const std::vector<EvalRecord>& records, double threshold) {
    AccuracyAtK out;
    std::size_t correct = 0;
    for (const auto& r : records) {
        if (r.confidence >= threshold) {
            ++out.retained;
            correct += r.correct ? 1 : 0;
        }
    }
    if (out.retained > 0)
        out.accuracy = static_cast<double>(correct) / static_cast<double>(out.retained);
    return out;
}

std::optional<std::size_t> min_examples_for_stability(const AccuracyCurve& curve, double fraction,
                                                      std::size_t reference_n) {
    const auto ref = curve.points.find(reference_n);
    if (ref == curve.points.end())
        throw ValidationError("curve has no point at reference n=" + std::to_string(reference_n));
    const double target = fraction * ref->second.mean;
    for (const auto& [n, point] : curve.points) {
        if (n > reference_n) break;
        if (point.mean >= target) return n;
    }
    return std::nullopt;
}

namespace {

std::vector<Fact> sample_examples(const RelationDataset& dataset, std::size_t n,
                                  std::uint64_t seed) {
    if (n > dataset.train.size())
        throw ValidationError("n=" + std::to_string(n) + " exceeds the train split (" +
                              std::to_string(dataset.train.size()) + ")");
    SeededRng rng(derive_seed(seed, {dataset.relation_id, "examples"}));
    const auto idx = rng.sample_indices(dataset.train.size(), n);
    // Keep the sampled order random (position effects are studied), not the
    // sorted index order.
    std::vector<Fact> out;
    out.reserve(n);
    for (auto i : idx) out.push_back(dataset.train[i]);
    rng.shuffle(out);
    return out;
}

}  // namespace

EvalRunResult run_eval(const ScoringBackend& backend, const RelationDataset& dataset,
                       const EvalRunConfig& config) {
    dataset.validate();
    EvalRunResult result;
    std::mutex mu;

    for (const auto seed : config.seeds) {
        std::vector<Fact> examples = sample_examples(dataset, config.n, seed);
        if (config.perturbation) {
            PerturbationSpec spec = *config.perturbation;
            spec.seed = derive_seed(seed, {dataset.relation_id, "perturb-seed"});
            examples = apply_perturbation(examples, spec).examples;
        }

        std::vector<EvalRecord> seed_records(dataset.test.size());
        std::vector<char> ok(dataset.test.size(), 0);
        std::vector<std::string> failures;
        std::atomic<std::size_t> next{0};
        const std::size_t workers = std::max<std::size_t>(1, config.parallelism);
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= dataset.test.size()) return;
                try {
                    EvalRecord rec = predict(backend, dataset.test[i], examples, config.separator);
                    rec.seed = seed;
                    rec.perturbation = config.perturbation;
                    seed_records[i] = std::move(rec);
                    ok[i] = 1;
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(mu);
                    failures.push_back(dataset.test[i].id() + ": " + e.what());
                }
            }
        };
        if (workers == 1) {
            worker();
        } else {
            std::vector<std::thread> threads;
            for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
            for (auto& t : threads) t.join();
        }

        std::vector<EvalRecord> kept;
        for (std::size_t i = 0; i < seed_records.size(); ++i)
            if (ok[i]) kept.push_back(std::move(seed_records[i]));
        std::sort(kept.begin(), kept.end(),
                  [](const EvalRecord& a, const EvalRecord& b) { return a.fact_id < b.fact_id; });
        if (!kept.empty()) result.accuracy_by_seed[seed] = accuracy(kept);
        std::sort(failures.begin(), failures.end());
        result.failed_facts.insert(result.failed_facts.end(), failures.begin(), failures.end());
        result.records.insert(result.records.end(), std::make_move_iterator(kept.begin()),
                              std::make_move_iterator(kept.end()));
    }
    return result;
}

AccuracyCurve accuracy_curve(const ScoringBackend& backend, const RelationDataset& dataset,
                             const std::vector<std::size_t>& n_grid,
                             const EvalRunConfig& config) {
    AccuracyCurve curve;
    curve.model_id = backend.model_id();
    curve.seeds = config.seeds;
    for (const auto n : n_grid) {
        EvalRunConfig point_config = config;
        point_config.n = n;
        const auto run = run_eval(backend, dataset, point_config);
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& [seed, acc] : run.accuracy_by_seed) {
            sum += acc;
            ++count;
        }
        if (count == 0) throw ValidationError("no seed produced records at n=" + std::to_string(n));
        AccuracyPoint p;
        p.mean = sum / static_cast<double>(count);
        // Centered form: exactly zero when every seed agrees, which the
        // uncentered identity loses to cancellation.
        double var = 0.0;
        for (const auto& [seed, acc] : run.accuracy_by_seed) var += (acc - p.mean) * (acc - p.mean);
        p.stddev = std::sqrt(var / static_cast<double>(count));
        curve.points[n] = p;
    }
    return curve;
}

std::string EvalRecord::to_json() const {
    json j;
    j["fact_id"] = fact_id;
    j["relation_id"] = relation_id;
    j["model_id"] = model_id;
    j["n"] = n;
    j["seed"] = seed;
    if (perturbation)
        j["perturbation"] = json::parse(perturbation->to_json());
    else
        j["perturbation"] = nullptr;
    j["predicted_object"] = predicted_object;
    j["correct"] = correct;
    j["confidence"] = confidence;
    j["degenerate_tie"] = degenerate_tie;
    // JSON has no -inf; clamp zero-probability scores to a finite floor that
    // still sorts below every reachable log-probability.
    auto finite_lp = [](double lp) { return std::isfinite(lp) ? lp : -1.0e308; };
    json choices = json::array();
    for (const auto& c : choice_scores) {
        json tokens = json::array();
        for (const auto& t : c.token_scores)
            tokens.push_back({{"token_text", t.token_text},
                              {"logprob", finite_lp(t.logprob)},
                              {"char_offset", t.char_offset}});
        choices.push_back({{"object", c.object},
                           {"joint_logprob", finite_lp(c.joint_logprob)},
                           {"normalized_prob", c.normalized_prob},
                           {"token_scores", tokens}});
    }
    j["choice_scores"] = choices;
    return j.dump();
}

EvalRecord EvalRecord::from_json(const std::string& line) {
    json j = json::parse(line);
    EvalRecord r;
    r.fact_id = j.at("fact_id").get<std::string>();
    r.relation_id = j.at("relation_id").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("perturbation").is_null())
        r.perturbation = PerturbationSpec::from_json(j.at("perturbation").dump());
    r.predicted_object = j.at("predicted_object").get<std::string>();
    r.correct = j.at("correct").get<bool>();
    r.confidence = j.at("confidence").get<double>();
    r.degenerate_tie = j.at("degenerate_tie").get<bool>();
    for (const auto& c : j.at("choice_scores")) {
        ChoiceScore cs;
        cs.object = c.at("object").get<std::string>();
        cs.joint_logprob = c.at("joint_logprob").get<double>();
        cs.normalized_prob = c.at("normalized_prob").get<double>();
        for (const auto& t : c.at("token_scores")) {
            TokenScore ts;
            ts.token_text = t.at("token_text").get<std::string>();
            ts.logprob = t.at("logprob").get<double>();
            ts.char_offset = t.at("char_offset").get<std::size_t>();
            cs.token_scores.push_back(std::move(ts));
        }
        r.choice_scores.push_back(std::move(cs));
    }
    return r;
}

void write_records_jsonl(std::ostream& out, const std::vector<EvalRecord>& records) {
    for (const auto& r : records) out << r.to_json() << '\n';
}

std::vector<EvalRecord> read_records_jsonl(std::istream& in) {
    std::vector<EvalRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(EvalRecord::from_json(line));
    }
    return out;
}

void write_accuracy_csv(
    std::ostream& out,
    const std::vector<std::tuple<std::string, std::size_t, std::uint64_t, double>>& rows) {
    out << "model_id,n,seed,accuracy\n";
    for (const auto& [model, n, seed, acc] : rows)
        out << model << ',' << n << ',' << seed << ',' << acc << '\n';
}

KnowledgeProfile profile_from_records(const std::string& model_id,
                                      const std::vector<EvalRecord>& records) {
    KnowledgeProfile profile;
    profile.model_id = model_id;
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_relation;  // correct, total
    for (const auto& r : records) {
        auto& [correct, total] = per_relation[r.relation_id];
        ++total;
        if (r.correct) {
            ++correct;
            profile.known_facts.insert(r.fact_id);
        }
    }
    for (const auto& [rel, counts] : per_relation)
        profile.per_relation_accuracy[rel] =
            static_cast<double>(counts.first) / static_cast<double>(counts.second);
    profile.validate();
    return profile;
}

}  // namespace zplke

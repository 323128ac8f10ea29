#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zplke/facts.hpp"
#include "zplke/prompt.hpp"
#include "zplke/scoring.hpp"

namespace zplke {

// Outcome of one multiple-choice prediction.
struct EvalRecord {
    std::string fact_id;
    std::string relation_id;
    std::string model_id;
    std::size_t n = 0;          // in-context example count
    std::uint64_t seed = 0;
    std::optional<PerturbationSpec> perturbation;
    std::vector<ChoiceScore> choice_scores;  // y* first, then alternatives in stored order
    std::string predicted_object;
    bool correct = false;
    double confidence = 0.0;    // normalized probability of the predicted choice
    bool degenerate_tie = false;

    std::string to_json() const;
    static EvalRecord from_json(const std::string& line);
};

struct AccuracyPoint {
    double mean = 0.0;
    double stddev = 0.0;  // over seeds
};

struct AccuracyCurve {
    std::string model_id;
    std::map<std::size_t, AccuracyPoint> points;  // n -> (mean, std)
    std::vector<std::uint64_t> seeds;
};

// Index of the maximal joint log-probability; earlier index wins ties.
// Exposed separately so the argmax rule is testable on raw scores.
struct ArgmaxResult {
    std::size_t index = 0;
    bool tie = false;
};
ArgmaxResult argmax_choice(const std::vector<ChoiceScore>& scores);

// Scores all M+1 candidates of `fact` as separator-prefixed continuations of
// the zero-prompt sequence built from `examples`, fills normalized
// probabilities, and takes the argmax (candidate order: y* first, then the
// stored alternatives). Throws ValidationError if the fact's subject appears
// among the examples.
EvalRecord predict(const ScoringBackend& backend, const MultipleChoiceFact& fact,
                   const std::vector<Fact>& examples, const std::string& separator = " ");

// Fraction of correct records. Throws ValidationError on empty input.
double accuracy(const std::vector<EvalRecord>& records);

enum class ResponseMatch { substring, token_subset };

// Open-ended check: greedy-generate k tokens and test whether the ground
// truth occurs in the detokenized output (or, in token_subset mode, whether
// every ground-truth word appears among the generated tokens).
bool response_test(const ScoringBackend& backend, const std::string& ground_truth,
                   const std::string& context, std::size_t k = 50,
                   ResponseMatch mode = ResponseMatch::substring);

struct AccuracyAtK {
    std::optional<double> accuracy;  // empty when no record meets the threshold
    std::size_t retained = 0;
};

// Accuracy over records with confidence >= threshold.
AccuracyAtK accuracy_at_k(const std::vector<EvalRecord>& records, double threshold);

// Smallest measured n whose mean accuracy reaches fraction * accuracy at
// reference_n. Throws ValidationError when the curve lacks the reference
// point; returns nullopt when no point below reference_n qualifies.
std::optional<std::size_t> min_examples_for_stability(const AccuracyCurve& curve,
                                                      double fraction = 0.95,
                                                      std::size_t reference_n = 50);

struct EvalRunConfig {
    std::size_t n = 50;                  // in-context examples per prediction
    std::vector<std::uint64_t> seeds{0};
    std::string separator = " ";
    std::size_t parallelism = 4;
    std::optional<PerturbationSpec> perturbation;  // applied to the example list
};

struct EvalRunResult {
    std::vector<EvalRecord> records;        // sorted by (seed, fact_id)
    std::vector<std::string> failed_facts;  // fact ids that could not be scored
    std::map<std::uint64_t, double> accuracy_by_seed;
};

// Evaluates every test fact of a RelationDataset. In-context examples are a
// seed-deterministic sample of n train facts; facts are scored in parallel
// and the output order is independent of the parallelism bound.
EvalRunResult run_eval(const ScoringBackend& backend, const RelationDataset& dataset,
                       const EvalRunConfig& config);

// Accuracy curve over a grid of n values (mean/std across config.seeds).
AccuracyCurve accuracy_curve(const ScoringBackend& backend, const RelationDataset& dataset,
                             const std::vector<std::size_t>& n_grid, const EvalRunConfig& config);

void write_records_jsonl(std::ostream& out, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_records_jsonl(std::istream& in);

// CSV: model_id,n,seed,accuracy
void write_accuracy_csv(std::ostream& out,
                        const std::vector<std::tuple<std::string, std::size_t, std::uint64_t,
                                                     double>>& rows);

// Builds a model's knowledge profile (per-relation accuracy and the set of
// correctly predicted fact ids) from its eval records.
KnowledgeProfile profile_from_records(const std::string& model_id,
                                      const std::vector<EvalRecord>& records);

}  // namespace zplke

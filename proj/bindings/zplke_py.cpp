// Python bindings for the zero-prompt latent knowledge toolkit.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "zplke/analysis.hpp"
#include "zplke/dataset_builder.hpp"
#include "zplke/errors.hpp"
#include "zplke/evaluator.hpp"
#include "zplke/facts.hpp"
#include "zplke/mock_lm.hpp"
#include "zplke/remote_lm.hpp"

namespace py = pybind11;
using namespace zplke;

PYBIND11_MODULE(_zplke, m) {
    m.doc() = "Latent factual knowledge estimation via zero-prompt many-shot scoring";

    py::register_exception<ParseError>(m, "ParseError");
    py::register_exception<ValidationError>(m, "ValidationError");
    py::register_exception<SamplingError>(m, "SamplingError");
    py::register_exception<BackendError>(m, "BackendError");
    py::register_exception<ProtocolError>(m, "ProtocolError");
    py::register_exception<CapabilityError>(m, "CapabilityError");
    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<AlignmentError>(m, "AlignmentError");

    py::class_<Fact>(m, "Fact")
        .def(py::init([](const std::string& subject, const std::string& relation,
                         const std::string& object) {
                 Fact f{canonicalize_text(subject), canonicalize_text(relation),
                        canonicalize_text(object)};
                 validate(f);
                 return f;
             }),
             py::arg("subject"), py::arg("relation"), py::arg("object"))
        .def_readonly("subject", &Fact::subject)
        .def_readonly("relation", &Fact::relation_id)
        .def_readonly("object", &Fact::object)
        .def("id", &Fact::id)
        .def("__eq__", [](const Fact& a, const Fact& b) { return a == b; })
        .def("__repr__", [](const Fact& f) {
            return "Fact(" + f.subject + ", " + f.relation_id + ", " + f.object + ")";
        });

    py::class_<MultipleChoiceFact>(m, "MultipleChoiceFact")
        .def(py::init([](const std::string& subject, const std::string& relation,
                         const std::string& correct_object,
                         const std::vector<std::string>& alternatives) {
                 MultipleChoiceFact f{subject, relation, correct_object, alternatives};
                 validate(f);
                 return f;
             }),
             py::arg("subject"), py::arg("relation"), py::arg("correct_object"),
             py::arg("alternatives"))
        .def_readonly("subject", &MultipleChoiceFact::subject)
        .def_readonly("relation", &MultipleChoiceFact::relation_id)
        .def_readonly("correct_object", &MultipleChoiceFact::correct_object)
        .def_readonly("alternatives", &MultipleChoiceFact::alternatives)
        .def_property_readonly("m", &MultipleChoiceFact::m)
        .def("id", &MultipleChoiceFact::id);

    py::class_<RelationDataset>(m, "RelationDataset")
        .def(py::init<>())
        .def_readwrite("relation_id", &RelationDataset::relation_id)
        .def_readwrite("train", &RelationDataset::train)
        .def_readwrite("test", &RelationDataset::test);

    py::class_<KnowledgeProfile>(m, "KnowledgeProfile")
        .def(py::init<>())
        .def_readwrite("model_id", &KnowledgeProfile::model_id)
        .def_readwrite("per_relation_accuracy", &KnowledgeProfile::per_relation_accuracy)
        .def_readwrite("known_facts", &KnowledgeProfile::known_facts);

    m.def(
        "load_facts",
        [](const std::string& path) {
            auto r = load_facts_file(path);
            return py::make_tuple(r.facts, r.duplicates_dropped);
        },
        py::arg("path"), "Load a TSV/JSONL fact file; returns (facts, duplicates_dropped).");
    m.def(
        "split_dataset",
        [](const std::vector<Fact>& facts, std::size_t n_train, std::uint64_t seed) {
            auto r = split_dataset(facts, n_train, seed);
            return py::make_tuple(r.train, r.heldout);
        },
        py::arg("facts"), py::arg("n_train"), py::arg("seed"));

    m.def("filter_relations", &filter_relations, py::arg("corpus"), py::arg("min_facts") = 500,
          py::arg("min_unique_objects") = 100);
    m.def("sample_alternatives", &sample_alternatives, py::arg("fact"), py::arg("relation_pool"),
          py::arg("m"), py::arg("subject_objects_index"), py::arg("seed"));

    py::class_<CharSpan>(m, "CharSpan")
        .def_readonly("offset", &CharSpan::offset)
        .def_readonly("length", &CharSpan::length);

    py::class_<PromptSequence>(m, "PromptSequence")
        .def_readonly("text", &PromptSequence::text)
        .def_readonly("separator", &PromptSequence::separator)
        .def_readonly("pair_spans", &PromptSequence::pair_spans)
        .def_readonly("query_span", &PromptSequence::query_span)
        .def_readonly("n", &PromptSequence::n);

    m.def("build_sequence", &build_sequence, py::arg("examples"), py::arg("query_subject"),
          py::arg("separator") = " ");
    m.def("build_template_prompt", &build_template_prompt, py::arg("template"), py::arg("subject"));

    py::enum_<PerturbationKind>(m, "PerturbationKind")
        .value("unknown", PerturbationKind::unknown)
        .value("incorrect", PerturbationKind::incorrect);
    py::enum_<Placement>(m, "Placement")
        .value("distributed", Placement::distributed)
        .value("continuous", Placement::continuous);

    py::class_<PerturbationSpec>(m, "PerturbationSpec")
        .def(py::init<>())
        .def_readwrite("kind", &PerturbationSpec::kind)
        .def_readwrite("placement", &PerturbationSpec::placement)
        .def_readwrite("count", &PerturbationSpec::count)
        .def_readwrite("seed", &PerturbationSpec::seed)
        .def_readwrite("replacement_pool", &PerturbationSpec::replacement_pool)
        .def("to_json", &PerturbationSpec::to_json)
        .def_static("from_json", &PerturbationSpec::from_json);

    m.def(
        "apply_perturbation",
        [](const std::vector<Fact>& examples, const PerturbationSpec& spec) {
            auto r = apply_perturbation(examples, spec);
            return py::make_tuple(r.examples, r.replaced_positions);
        },
        py::arg("examples"), py::arg("spec"));

    py::class_<TokenScore>(m, "TokenScore")
        .def_readonly("token_text", &TokenScore::token_text)
        .def_readonly("logprob", &TokenScore::logprob)
        .def_readonly("char_offset", &TokenScore::char_offset);

    py::class_<ChoiceScore>(m, "ChoiceScore")
        .def_readonly("object", &ChoiceScore::object)
        .def_readonly("token_scores", &ChoiceScore::token_scores)
        .def_readonly("joint_logprob", &ChoiceScore::joint_logprob)
        .def_readonly("normalized_prob", &ChoiceScore::normalized_prob);

    py::class_<ScoringBackend>(m, "ScoringBackend")
        .def("model_id", &ScoringBackend::model_id)
        .def("score_continuation", &ScoringBackend::score_continuation, py::arg("context"),
             py::arg("continuation"))
        .def("generate_greedy", &ScoringBackend::generate_greedy, py::arg("context"), py::arg("k"));

    py::class_<MockOracleLM::KnowledgeEntry>(m, "KnowledgeEntry")
        .def(py::init([](const std::string& object, bool known, std::optional<std::size_t> ramp) {
                 return MockOracleLM::KnowledgeEntry{object, known, ramp};
             }),
             py::arg("object"), py::arg("known") = true, py::arg("ramp") = std::nullopt);

    py::class_<MockOracleLM::Config>(m, "MockConfig")
        .def(py::init<>())
        .def_readwrite("model_id", &MockOracleLM::Config::model_id)
        .def_readwrite("knowledge", &MockOracleLM::Config::knowledge)
        .def_readwrite("n_ramp", &MockOracleLM::Config::n_ramp)
        .def_readwrite("p_max", &MockOracleLM::Config::p_max)
        .def_readwrite("epsilon", &MockOracleLM::Config::epsilon)
        .def_readwrite("confusion_set", &MockOracleLM::Config::confusion_set)
        .def_readwrite("tie_jitter", &MockOracleLM::Config::tie_jitter);

    py::class_<MockOracleLM, ScoringBackend>(m, "MockOracleLM")
        .def(py::init<MockOracleLM::Config>(), py::arg("config"))
        .def("next_token_distribution", &MockOracleLM::next_token_distribution, py::arg("prefix"));

    py::class_<RemoteBackend::Config>(m, "RemoteConfig")
        .def(py::init<>())
        .def_readwrite("base_url", &RemoteBackend::Config::base_url)
        .def_readwrite("path", &RemoteBackend::Config::path)
        .def_readwrite("model", &RemoteBackend::Config::model)
        .def_readwrite("api_key", &RemoteBackend::Config::api_key)
        .def_readwrite("timeout_seconds", &RemoteBackend::Config::timeout_seconds)
        .def_readwrite("max_attempts", &RemoteBackend::Config::max_attempts);

    py::class_<RemoteBackend, ScoringBackend>(m, "RemoteBackend")
        .def(py::init<RemoteBackend::Config>(), py::arg("config"));

    m.def("object_probability", &object_probability, py::arg("scores"));
    m.def("object_probability_per_token", &object_probability_per_token, py::arg("scores"));

    py::class_<PositionProbability>(m, "PositionProbability")
        .def_readonly("position", &PositionProbability::position)
        .def_readonly("joint_logprob", &PositionProbability::joint_logprob)
        .def_readonly("mean_token_logprob", &PositionProbability::mean_token_logprob)
        .def_readonly("token_count", &PositionProbability::token_count);

    m.def("per_position_object_probabilities", &per_position_object_probabilities,
          py::arg("backend"), py::arg("seq"));

    py::class_<EvalRecord>(m, "EvalRecord")
        .def_readonly("fact_id", &EvalRecord::fact_id)
        .def_readonly("relation_id", &EvalRecord::relation_id)
        .def_readonly("model_id", &EvalRecord::model_id)
        .def_readonly("n", &EvalRecord::n)
        .def_readonly("seed", &EvalRecord::seed)
        .def_readonly("choice_scores", &EvalRecord::choice_scores)
        .def_readonly("predicted_object", &EvalRecord::predicted_object)
        .def_readonly("correct", &EvalRecord::correct)
        .def_readonly("confidence", &EvalRecord::confidence)
        .def_readonly("degenerate_tie", &EvalRecord::degenerate_tie)
        .def("to_json", &EvalRecord::to_json)
        .def_static("from_json", &EvalRecord::from_json);

    m.def("predict", &predict, py::arg("backend"), py::arg("fact"), py::arg("examples"),
          py::arg("separator") = " ");
    m.def("accuracy", &accuracy, py::arg("records"));
    m.def(
        "response_test",
        [](const ScoringBackend& backend, const std::string& ground_truth,
           const std::string& context, std::size_t k, const std::string& mode) {
            return response_test(backend, ground_truth, context, k,
                                 mode == "token_subset" ? ResponseMatch::token_subset
                                                        : ResponseMatch::substring);
        },
        py::arg("backend"), py::arg("ground_truth"), py::arg("context"), py::arg("k") = 50,
        py::arg("mode") = "substring");
    m.def(
        "accuracy_at_k",
        [](const std::vector<EvalRecord>& records, double threshold) {
            auto r = accuracy_at_k(records, threshold);
            return py::make_tuple(r.accuracy, r.retained);
        },
        py::arg("records"), py::arg("threshold"));

    py::class_<AccuracyPoint>(m, "AccuracyPoint")
        .def_readonly("mean", &AccuracyPoint::mean)
        .def_readonly("stddev", &AccuracyPoint::stddev);

    py::class_<AccuracyCurve>(m, "AccuracyCurve")
        .def(py::init<>())
        .def_readwrite("model_id", &AccuracyCurve::model_id)
        .def_readwrite("points", &AccuracyCurve::points)
        .def_readwrite("seeds", &AccuracyCurve::seeds);

    m.def(
        "make_accuracy_curve",
        [](const std::string& model_id, const std::map<std::size_t, std::pair<double, double>>& pts) {
            AccuracyCurve c;
            c.model_id = model_id;
            for (const auto& [n, ms] : pts) c.points[n] = AccuracyPoint{ms.first, ms.second};
            return c;
        },
        py::arg("model_id"), py::arg("points"),
        "Build a curve from {n: (mean, std)} without running evaluations.");
    m.def("min_examples_for_stability", &min_examples_for_stability, py::arg("curve"),
          py::arg("fraction") = 0.95, py::arg("reference_n") = 50);

    py::class_<EvalRunConfig>(m, "EvalRunConfig")
        .def(py::init<>())
        .def_readwrite("n", &EvalRunConfig::n)
        .def_readwrite("seeds", &EvalRunConfig::seeds)
        .def_readwrite("separator", &EvalRunConfig::separator)
        .def_readwrite("parallelism", &EvalRunConfig::parallelism);

    py::class_<EvalRunResult>(m, "EvalRunResult")
        .def_readonly("records", &EvalRunResult::records)
        .def_readonly("failed_facts", &EvalRunResult::failed_facts)
        .def_readonly("accuracy_by_seed", &EvalRunResult::accuracy_by_seed);

    m.def("run_eval", &run_eval, py::arg("backend"), py::arg("dataset"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("accuracy_curve", &accuracy_curve, py::arg("backend"), py::arg("dataset"),
          py::arg("n_grid"), py::arg("config"), py::call_guard<py::gil_scoped_release>());

    m.def("profile_from_records", &profile_from_records, py::arg("model_id"), py::arg("records"));
    m.def("subsumption_rate", &subsumption_rate, py::arg("profile_small"), py::arg("profile_large"),
          py::arg("fact_universe"));
    m.def("pearson", &pearson, py::arg("v1"), py::arg("v2"));
    m.def("rank_relations", &rank_relations, py::arg("profiles"));
    m.def(
        "family_average_correlation",
        [](const std::vector<KnowledgeProfile>& profiles,
           const std::map<std::string, std::string>& families) {
            auto r = family_average_correlation(profiles, families);
            return py::make_tuple(r.families, r.values);
        },
        py::arg("profiles"), py::arg("model_to_family"));

    py::class_<BuildConfig>(m, "BuildConfig")
        .def(py::init<>())
        .def_readwrite("min_facts", &BuildConfig::min_facts)
        .def_readwrite("min_unique_objects", &BuildConfig::min_unique_objects)
        .def_readwrite("m", &BuildConfig::m)
        .def_readwrite("n_train", &BuildConfig::n_train)
        .def_readwrite("seed", &BuildConfig::seed);

    m.def(
        "build_mc_dataset",
        [](const std::vector<Fact>& corpus, const BuildConfig& config,
           const std::map<std::string, std::string>& alias_map) {
            return build_mc_dataset(corpus, config, alias_map).datasets;
        },
        py::arg("corpus"), py::arg("config"),
        py::arg("alias_map") = std::map<std::string, std::string>{});
}

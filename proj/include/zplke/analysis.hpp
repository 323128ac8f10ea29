#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "zplke/facts.hpp"

namespace zplke {

// Fraction of the first model's known facts that the second model also
// knows: |known1 ∩ known2| / |known1|. Throws ValidationError when known1 is
// empty or either known set leaves the fact universe.
double subsumption_rate(const KnowledgeProfile& profile_small,
                        const KnowledgeProfile& profile_large,
                        const std::set<std::string>& fact_universe);

// Standard Pearson correlation coefficient. Throws ValidationError on length
// mismatch, fewer than two points, or zero variance in either vector.
double pearson(const std::vector<double>& v1, const std::vector<double>& v2);

struct FamilyCorrelationMatrix {
    std::vector<std::string> families;  // sorted
    // entry (i,j): mean pairwise Pearson over model pairs across the two
    // families, excluding self-pairs on the diagonal. Unavailable when a
    // family has a single model and i == j.
    std::vector<std::vector<std::optional<double>>> values;
};

// Per-relation accuracy vectors are aligned on the shared (sorted) relation
// set; every profile must cover it.
FamilyCorrelationMatrix family_average_correlation(
    const std::vector<KnowledgeProfile>& profiles,
    const std::map<std::string, std::string>& model_to_family);

// Relations sorted by mean accuracy across the profiles, descending, with
// ties broken by relation_id.
std::vector<std::pair<std::string, double>> rank_relations(
    const std::vector<KnowledgeProfile>& profiles);

// CSV emitters (plot-ready; no rendering here).
void write_family_matrix_csv(std::ostream& out, const FamilyCorrelationMatrix& matrix);
void write_ranking_csv(std::ostream& out,
                       const std::vector<std::pair<std::string, double>>& ranking);

struct EtaRow {
    std::string family;
    std::string small_model;
    double small_acc = 0.0;
    std::string large_model;
    double large_acc = 0.0;
    double eta = 0.0;
};
void write_eta_csv(std::ostream& out, const std::vector<EtaRow>& rows);

}  // namespace zplke

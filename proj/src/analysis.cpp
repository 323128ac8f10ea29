#include "zplke/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "zplke/errors.hpp"

namespace zplke {

double subsumption_rate(const KnowledgeProfile& profile_small,
                        const KnowledgeProfile& profile_large,
                        const std::set<std::string>& fact_universe) {
    if (profile_small.known_facts.empty())
        throw ValidationError("subsumption rate is undefined for an empty known set");
    for (const auto* profile : {&profile_small, &profile_large}) {
        for (const auto& f : profile->known_facts)
            if (!fact_universe.count(f))
                throw ValidationError("known fact outside the universe: " + f);
    }
    std::size_t intersection = 0;
    for (const auto& f : profile_small.known_facts)
        if (profile_large.known_facts.count(f)) ++intersection;
    return static_cast<double>(intersection) /
           static_cast<double>(profile_small.known_facts.size());
}

double pearson(const std::vector<double>& v1, const std::vector<double>& v2) {
    if (v1.size() != v2.size()) throw ValidationError("pearson: length mismatch");
    if (v1.size() < 2) throw ValidationError("pearson needs at least two points");
    const double n = static_cast<double>(v1.size());
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < v1.size(); ++i) {
        m1 += v1[i];
        m2 += v2[i];
    }
    m1 /= n;
    m2 /= n;
    double cov = 0.0, var1 = 0.0, var2 = 0.0;
    for (std::size_t i = 0; i < v1.size(); ++i) {
        const double d1 = v1[i] - m1;
        const double d2 = v2[i] - m2;
        cov += d1 * d2;
        var1 += d1 * d1;
        var2 += d2 * d2;
    }
    if (var1 == 0.0 || var2 == 0.0)
        throw ValidationError("pearson is undefined under zero variance");
    return cov / std::sqrt(var1 * var2);
}

namespace {

std::vector<double> accuracy_vector(const KnowledgeProfile& p,
                                    const std::vector<std::string>& relations) {
    std::vector<double> v;
    v.reserve(relations.size());
    for (const auto& rel : relations) {
        const auto it = p.per_relation_accuracy.find(rel);
        if (it == p.per_relation_accuracy.end())
            throw ValidationError("profile " + p.model_id + " lacks relation " + rel);
        v.push_back(it->second);
    }
    return v;
}

}  // namespace

FamilyCorrelationMatrix family_average_correlation(
    const std::vector<KnowledgeProfile>& profiles,
    const std::map<std::string, std::string>& model_to_family) {
    if (profiles.empty()) throw ValidationError("no profiles given");

    // Shared relation set: intersection is required to be total, so take the
    // first profile's relations and check coverage while vectorizing.
    std::vector<std::string> relations;
    for (const auto& [rel, acc] : profiles.front().per_relation_accuracy)
        relations.push_back(rel);

    std::map<std::string, std::vector<std::vector<double>>> by_family;
    for (const auto& p : profiles) {
        const auto it = model_to_family.find(p.model_id);
        if (it == model_to_family.end())
            throw ValidationError("no family for model " + p.model_id);
        by_family[it->second].push_back(accuracy_vector(p, relations));
    }

    FamilyCorrelationMatrix matrix;
    for (const auto& [family, members] : by_family) matrix.families.push_back(family);
    const std::size_t k = matrix.families.size();
    matrix.values.assign(k, std::vector<std::optional<double>>(k));

    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
            const auto& fa = by_family[matrix.families[a]];
            const auto& fb = by_family[matrix.families[b]];
            double sum = 0.0;
            std::size_t pairs = 0;
            for (std::size_t i = 0; i < fa.size(); ++i) {
                for (std::size_t j = 0; j < fb.size(); ++j) {
                    if (a == b && i >= j) continue;  // skip self-pairs and double counting
                    sum += pearson(fa[i], fb[j]);
                    ++pairs;
                }
            }
            if (pairs > 0) {
                matrix.values[a][b] = sum / static_cast<double>(pairs);
                matrix.values[b][a] = matrix.values[a][b];
            }
        }
    }
    return matrix;
}

std::vector<std::pair<std::string, double>> rank_relations(
    const std::vector<KnowledgeProfile>& profiles) {
    if (profiles.empty()) throw ValidationError("no profiles given");
    std::vector<std::string> relations;
    for (const auto& [rel, acc] : profiles.front().per_relation_accuracy)
        relations.push_back(rel);
    std::vector<std::pair<std::string, double>> out;
    for (const auto& rel : relations) {
        double sum = 0.0;
        for (const auto& p : profiles) {
            const auto it = p.per_relation_accuracy.find(rel);
            if (it == p.per_relation_accuracy.end())
                throw ValidationError("profile " + p.model_id + " lacks relation " + rel);
            sum += it->second;
        }
        out.emplace_back(rel, sum / static_cast<double>(profiles.size()));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

void write_family_matrix_csv(std::ostream& out, const FamilyCorrelationMatrix& matrix) {
    out << "family";
    for (const auto& f : matrix.families) out << ',' << f;
    out << '\n';
    for (std::size_t i = 0; i < matrix.families.size(); ++i) {
        out << matrix.families[i];
        for (std::size_t j = 0; j < matrix.families.size(); ++j) {
            out << ',';
            if (matrix.values[i][j]) out << *matrix.values[i][j];
        }
        out << '\n';
    }
}

void write_ranking_csv(std::ostream& out,
                       const std::vector<std::pair<std::string, double>>& ranking) {
    out << "relation_id,mean_accuracy\n";
    for (const auto& [rel, acc] : ranking) out << rel << ',' << acc << '\n';
}

void write_eta_csv(std::ostream& out, const std::vector<EtaRow>& rows) {
    out << "family,small_model,small_acc,large_model,large_acc,eta\n";
    for (const auto& r : rows)
        out << r.family << ',' << r.small_model << ',' << r.small_acc << ',' << r.large_model
            << ',' << r.large_acc << ',' << r.eta << '\n';
}

}  // namespace zplke

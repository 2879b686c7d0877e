#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindtrace/core.hpp"

namespace mindtrace {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, fn = 0;
};

struct Prf {
    double precision = 0, recall = 0, f1 = 0;
};

// Standard definitions with 0/0 -> 0.
Prf prf1(const ConfusionCounts& c);

// Per-post Task 1 prediction: labels plus optional presence ratings.
struct AnnotationPrediction {
    std::string timeline_id;
    std::string post_id;
    std::set<LabelTriple> labels;
    std::optional<int> adaptive_presence;
    std::optional<int> maladaptive_presence;
};

struct PresenceMetrics {
    double mae = 0, rmse = 0, qwk = 0, spearman = 0;
};

// MAE, RMSE, quadratic weighted kappa (K = 5 ordinal categories), Spearman
// with average ranks for ties.
PresenceMetrics presence_metrics(std::span<const int> pred, std::span<const int> gold);

struct Task1Report {
    // element -> valence -> binary F1 over posts with gold evidence
    std::map<std::string, std::map<std::string, Prf>> element_prf;
    double adaptive_macro_f1 = 0;
    double maladaptive_macro_f1 = 0;
    double final_f1 = 0;  // mean of the two valence macros
    std::map<std::string, double> subelement_macro_f1;  // per element
    double subelement_avg_macro_f1 = 0;
    std::map<std::string, PresenceMetrics> presence;  // keyed adaptive/maladaptive
    double ranking_score = 0;  // mean of the two valence RMSEs

    nlohmann::json to_json() const;
};

Task1Report task1_report(std::span<const AnnotationPrediction> preds,
                         std::span<const Timeline> gold, const LabelSchema& schema);

struct ChangePredictionRecord {
    std::string timeline_id;
    std::string post_id;
    bool switch_flag = false;
    bool escalation = false;
    std::optional<std::string> justification;
};

struct Task2Report {
    std::map<std::string, Prf> post_level;           // keyed switch/escalation, pooled counts
    std::map<std::string, double> timeline_level_f1; // per-timeline F1 macro-averaged
    double post_macro_f1 = 0;      // mean of switch F1 and escalation F1
    double timeline_macro_f1 = 0;
    double final_f1 = 0;           // mean of the two macro levels

    nlohmann::json to_json() const;
};

// Every post must have exactly one prediction; missing posts are reported in
// the error message.
Task2Report task2_report(std::span<const ChangePredictionRecord> preds,
                         std::span<const Timeline> gold);

// Summary-level LCS recall over whitespace tokens.
double rouge_l_recall(std::string_view candidate, std::string_view reference);

struct RankAverageResult {
    std::vector<std::vector<int>> metric_ranks;  // [metric][system], competition ranking
    std::vector<double> avg_rank;                // per system
    std::vector<int> final_rank;                 // by avg ascending, ties share min rank
};

RankAverageResult rank_average(const std::vector<std::vector<double>>& scores,
                               const std::vector<bool>& higher_is_better);

struct CorrelationResult {
    double r = 0;
    double p = 1;  // two-sided, t-distribution with n-2 dof
};

CorrelationResult pearson_correlation(std::span<const double> xs, std::span<const double> ys);

std::vector<std::vector<std::string>> kfold_split(std::span<const std::string> ids, int k,
                                                  std::uint64_t seed);

// Regularized incomplete beta I_x(a, b); exposed for the p-value computation.
double incomplete_beta(double a, double b, double x);

}  // namespace mindtrace

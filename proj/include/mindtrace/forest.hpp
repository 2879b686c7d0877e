#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mindtrace/core.hpp"

namespace mindtrace {

struct TrainingConfig {
    int n_trees = 100;
    int max_depth = 8;
    int min_samples_leaf = 2;
    std::uint64_t seed = 0;
    double pos_weight_cap = 20.0;
    double threshold = 0.5;  // probability cutoff for binary prediction
};

// min(n_neg / n_pos, cap); the positive-class up-weighting rule.
double pos_weight(std::size_t n_neg, std::size_t n_pos, double cap = 20.0);

std::vector<double> one_hot_encode(const std::set<LabelTriple>& labels, const LabelSchema& schema);

enum class ForestMode { regression, binary };

struct TreeNode {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0;   // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    double leaf_value = 0;  // mean target / weighted positive fraction
};

class ForestModel {
public:
    ForestModel() = default;
    ForestModel(std::vector<std::vector<TreeNode>> trees, ForestMode mode, std::size_t dim)
        : trees_(std::move(trees)), mode_(mode), dim_(dim) {}

    ForestMode mode() const { return mode_; }
    std::size_t dim() const { return dim_; }
    std::size_t n_trees() const { return trees_.size(); }

    // Mean tree output: predicted target (regression) or positive
    // probability (binary).
    double predict_raw(std::span<const double> x) const;

    nlohmann::json to_json() const;
    static ForestModel from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static ForestModel load(const std::string& path);

private:
    std::vector<std::vector<TreeNode>> trees_;
    ForestMode mode_ = ForestMode::regression;
    std::size_t dim_ = 0;
};

ForestModel train_presence_regressor(
    const std::vector<std::pair<std::vector<double>, double>>& rows,
    const TrainingConfig& config);

// Raw mean rounded half-away-from-zero, clamped to [1,5].
int predict_presence(const ForestModel& model, std::span<const double> x);

ForestModel train_change_classifier(const std::vector<std::pair<std::vector<double>, bool>>& rows,
                                    const TrainingConfig& config, bool use_weighting = true);

double predict_change_proba(const ForestModel& model, std::span<const double> x);
bool predict_change(const ForestModel& model, std::span<const double> x, double threshold = 0.5);

}  // namespace mindtrace

#include "mindtrace/forest.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mindtrace {

using nlohmann::json;

double pos_weight(std::size_t n_neg, std::size_t n_pos, double cap) {
    if (cap <= 0) throw RangeError("pos_weight cap must be > 0");
    if (n_pos == 0) throw ValidationError("pos_weight: no positive samples");
    return std::min(static_cast<double>(n_neg) / static_cast<double>(n_pos), cap);
}

std::vector<double> one_hot_encode(const std::set<LabelTriple>& labels,
                                   const LabelSchema& schema) {
    std::vector<double> v(schema.one_hot_dim(), 0.0);
    for (const auto& l : labels) v[schema.index_of(l)] = 1.0;  // throws on unknown triple
    return v;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Training rows deduplicated into weighted unique rows, canonically sorted.
// This makes training invariant to row permutation and to duplicating the
// whole dataset.
struct UniqueRows {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    std::vector<double> multiplicity;
};

UniqueRows dedupe(const std::vector<std::pair<std::vector<double>, double>>& rows) {
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (rows[a].first != rows[b].first) return rows[a].first < rows[b].first;
        return rows[a].second < rows[b].second;
    });
    UniqueRows u;
    for (std::size_t i : order) {
        if (!u.x.empty() && u.x.back() == rows[i].first && u.y.back() == rows[i].second) {
            u.multiplicity.back() += 1.0;
        } else {
            u.x.push_back(rows[i].first);
            u.y.push_back(rows[i].second);
            u.multiplicity.push_back(1.0);
        }
    }
    return u;
}

struct NodeStats {
    double w = 0, wy = 0, wyy = 0;
    void add(double weight, double y) {
        w += weight;
        wy += weight * y;
        wyy += weight * y * y;
    }
    // Weighted SSE for regression; for binary (y in {0,1}) this equals
    // w * p * (1 - p), proportional to weighted Gini.
    double impurity() const { return w > 0 ? wyy - wy * wy / w : 0.0; }
    double mean() const { return w > 0 ? wy / w : 0.0; }
};

class TreeBuilder {
public:
    TreeBuilder(const UniqueRows& data, const std::vector<double>& weights,
                const TrainingConfig& config, std::mt19937_64& rng)
        : data_(data), weights_(weights), config_(config), rng_(rng) {
        dim_ = data.x.empty() ? 0 : data.x[0].size();
        n_candidate_features_ = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(dim_)))));
    }

    std::vector<TreeNode> build() {
        nodes_.clear();
        std::vector<std::size_t> all(data_.x.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        grow(all, 0);
        return std::move(nodes_);
    }

private:
    int grow(std::vector<std::size_t>& idx, int depth) {
        NodeStats stats;
        for (std::size_t i : idx) stats.add(weights_[i], data_.y[i]);

        const int node_id = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        nodes_[node_id].leaf_value = stats.mean();

        if (depth >= config_.max_depth ||
            idx.size() < 2 * static_cast<std::size_t>(config_.min_samples_leaf) ||
            stats.impurity() <= 1e-12) {
            return node_id;
        }

        auto features = sample_features();
        int best_feature = -1;
        double best_threshold = 0, best_impurity = stats.impurity();
        for (int f : features) {
            // Sort node rows by this feature; scan split points between
            // distinct values.
            std::vector<std::size_t> order = idx;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return data_.x[a][f] != data_.x[b][f] ? data_.x[a][f] < data_.x[b][f] : a < b;
            });
            NodeStats left;
            NodeStats right = stats;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                const double w = weights_[order[i]], y = data_.y[order[i]];
                left.add(w, y);
                right.add(-w, y);
                const double v = data_.x[order[i]][f], next = data_.x[order[i + 1]][f];
                if (v == next) continue;
                if (i + 1 < static_cast<std::size_t>(config_.min_samples_leaf) ||
                    order.size() - i - 1 < static_cast<std::size_t>(config_.min_samples_leaf))
                    continue;
                const double imp = left.impurity() + right.impurity();
                if (imp < best_impurity - 1e-12) {
                    best_impurity = imp;
                    best_feature = f;
                    best_threshold = (v + next) / 2.0;
                }
            }
        }
        if (best_feature < 0) return node_id;

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : idx)
            (data_.x[i][best_feature] <= best_threshold ? left_idx : right_idx).push_back(i);

        nodes_[node_id].feature = best_feature;
        nodes_[node_id].threshold = best_threshold;
        nodes_[node_id].left = grow(left_idx, depth + 1);
        nodes_[node_id].right = grow(right_idx, depth + 1);
        return node_id;
    }

    std::vector<int> sample_features() {
        std::vector<int> all(dim_);
        for (std::size_t i = 0; i < dim_; ++i) all[i] = static_cast<int>(i);
        if (n_candidate_features_ >= dim_) return all;
        for (std::size_t i = 0; i < n_candidate_features_; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, dim_ - 1);
            std::swap(all[i], all[pick(rng_)]);
        }
        all.resize(n_candidate_features_);
        std::sort(all.begin(), all.end());
        return all;
    }

    const UniqueRows& data_;
    const std::vector<double>& weights_;
    const TrainingConfig& config_;
    std::mt19937_64& rng_;
    std::size_t dim_ = 0;
    std::size_t n_candidate_features_ = 0;
    std::vector<TreeNode> nodes_;
};

ForestModel train_forest(const UniqueRows& data, const std::vector<double>& class_weights,
                         const TrainingConfig& config, ForestMode mode) {
    if (config.n_trees < 1) throw RangeError("n_trees must be >= 1");
    const std::size_t dim = data.x.empty() ? 0 : data.x[0].size();
    for (const auto& row : data.x)
        if (row.size() != dim) throw ValidationError("inconsistent feature dimensions");

    std::vector<std::vector<TreeNode>> trees;
    trees.reserve(static_cast<std::size_t>(config.n_trees));
    for (int t = 0; t < config.n_trees; ++t) {
        std::mt19937_64 rng(splitmix64(config.seed ^ (0xa5a5a5a5ULL + static_cast<std::uint64_t>(t))));
        // Bayesian bootstrap: per-row exponential weight perturbation keyed
        // by canonical row order, so bagging commutes with row permutation
        // and dataset duplication.
        std::vector<double> weights(data.x.size());
        std::uniform_real_distribution<double> unif(1e-12, 1.0);
        for (std::size_t i = 0; i < weights.size(); ++i)
            weights[i] = data.multiplicity[i] * class_weights[i] * -std::log(unif(rng));
        trees.push_back(TreeBuilder(data, weights, config, rng).build());
    }
    return ForestModel(std::move(trees), mode, dim);
}

double traverse(const std::vector<TreeNode>& nodes, std::span<const double> x) {
    int cur = 0;
    while (nodes[cur].feature >= 0)
        cur = x[static_cast<std::size_t>(nodes[cur].feature)] <= nodes[cur].threshold
                  ? nodes[cur].left
                  : nodes[cur].right;
    return nodes[cur].leaf_value;
}

}  // namespace

double ForestModel::predict_raw(std::span<const double> x) const {
    if (x.size() != dim_)
        throw ValidationError("predict: expected dimension " + std::to_string(dim_) + ", got " +
                              std::to_string(x.size()));
    double sum = 0;
    for (const auto& tree : trees_) sum += traverse(tree, x);
    return sum / static_cast<double>(trees_.size());
}

ForestModel train_presence_regressor(
    const std::vector<std::pair<std::vector<double>, double>>& rows,
    const TrainingConfig& config) {
    if (rows.size() < 2) throw ValidationError("presence regressor needs >= 2 rows");
    for (const auto& [x, y] : rows)
        if (y < 1 || y > 5) throw ValidationError("presence target out of [1,5]");
    UniqueRows data = dedupe(rows);
    std::vector<double> class_weights(data.x.size(), 1.0);
    return train_forest(data, class_weights, config, ForestMode::regression);
}

int predict_presence(const ForestModel& model, std::span<const double> x) {
    if (model.mode() != ForestMode::regression)
        throw ValidationError("predict_presence requires a regression model");
    const double raw = model.predict_raw(x);
    const int rounded = static_cast<int>(std::round(raw));  // half away from zero
    return std::clamp(rounded, 1, 5);
}

ForestModel train_change_classifier(const std::vector<std::pair<std::vector<double>, bool>>& rows,
                                    const TrainingConfig& config, bool use_weighting) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& [x, y] : rows) (y ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw ValidationError("change classifier requires both classes present");
    const double w_pos = use_weighting ? pos_weight(n_neg, n_pos, config.pos_weight_cap) : 1.0;

    std::vector<std::pair<std::vector<double>, double>> numeric;
    numeric.reserve(rows.size());
    for (const auto& [x, y] : rows) numeric.emplace_back(x, y ? 1.0 : 0.0);
    UniqueRows data = dedupe(numeric);
    std::vector<double> class_weights(data.x.size());
    for (std::size_t i = 0; i < data.x.size(); ++i)
        class_weights[i] = data.y[i] > 0.5 ? w_pos : 1.0;
    return train_forest(data, class_weights, config, ForestMode::binary);
}

double predict_change_proba(const ForestModel& model, std::span<const double> x) {
    if (model.mode() != ForestMode::binary)
        throw ValidationError("predict_change requires a binary model");
    return model.predict_raw(x);
}

bool predict_change(const ForestModel& model, std::span<const double> x, double threshold) {
    return predict_change_proba(model, x) >= threshold;
}

json ForestModel::to_json() const {
    json jtrees = json::array();
    for (const auto& tree : trees_) {
        json jt = json::array();
        for (const auto& n : tree)
            jt.push_back({{"feature", n.feature},
                          {"threshold", n.threshold},
                          {"left", n.left},
                          {"right", n.right},
                          {"leaf_value", n.leaf_value}});
        jtrees.push_back(std::move(jt));
    }
    return json{{"format", "mindtrace-forest"},
                {"version", 1},
                {"mode", mode_ == ForestMode::regression ? "regression" : "binary"},
                {"dim", dim_},
                {"trees", std::move(jtrees)}};
}

ForestModel ForestModel::from_json(const json& j) {
    if (!j.is_object() || j.value("format", "") != "mindtrace-forest")
        throw ValidationError("not a forest model file");
    if (j.value("version", 0) != 1) throw ValidationError("unsupported forest model version");
    const std::string mode_str = j.at("mode").get<std::string>();
    ForestMode mode;
    if (mode_str == "regression")
        mode = ForestMode::regression;
    else if (mode_str == "binary")
        mode = ForestMode::binary;
    else
        throw ValidationError("unknown forest mode: " + mode_str);

    std::vector<std::vector<TreeNode>> trees;
    for (const auto& jt : j.at("trees")) {
        std::vector<TreeNode> tree;
        for (const auto& jn : jt)
            tree.push_back({jn.at("feature").get<int>(), jn.at("threshold").get<double>(),
                            jn.at("left").get<int>(), jn.at("right").get<int>(),
                            jn.at("leaf_value").get<double>()});
        trees.push_back(std::move(tree));
    }
    return ForestModel(std::move(trees), mode, j.at("dim").get<std::size_t>());
}

void ForestModel::save(const std::string& path) const { write_file(path, to_json().dump(2) + "\n"); }

ForestModel ForestModel::load(const std::string& path) {
    try {
        return from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model file: ") + e.what(), e.byte);
    }
}

}  // namespace mindtrace

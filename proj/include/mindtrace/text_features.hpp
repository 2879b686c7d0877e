#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mindtrace/core.hpp"

namespace mindtrace {

struct TokenizedText {
    std::vector<std::string> tokens;  // lowercased, split on non-alphanumeric runs
    int sentences = 0;                // non-empty segments after splitting on [.!?]+
    std::string raw;
};

TokenizedText tokenize(std::string_view raw);

// Simple word list for sentiment fractions and stopword removal.
class WordList {
public:
    WordList() = default;
    explicit WordList(std::vector<std::string> words);
    static WordList load(const std::string& path);  // one word per line, '#' comments
    bool contains(std::string_view w) const;
    std::size_t size() const { return words_.size(); }

private:
    std::unordered_set<std::string> words_;
};

// The 14 hand-crafted per-post features, in table order.
struct LinguisticFeatures {
    double log_len = 0;        // log(1 + word count)
    double n_sentences = 0;    // split on [.!?]+
    double avg_word_len = 0;   // mean characters per word
    double frac_upper = 0;     // uppercase chars / total chars
    double frac_punct = 0;     // chars in !?.,;: / total chars
    double n_exclaim = 0;
    double n_question = 0;
    double n_ellipsis = 0;     // occurrences of "..."
    double emo_punct = 0;      // min(n_exclaim + n_question, 10)
    double frac_neg = 0;       // words in negative lexicon / word count
    double frac_pos = 0;
    double sentiment_balance = 0;  // frac_neg - frac_pos
    double words_per_sent = 0;     // word count / sentence count, 0 if no sentences
    double has_removed = 0;        // text is "[removed]" or "[deleted]"

    static constexpr std::size_t kCount = 14;
    std::array<double, kCount> as_array() const;
    static const std::array<const char*, kCount>& names();
};

LinguisticFeatures linguistic_features(std::string_view raw, const WordList& negative,
                                       const WordList& positive);

struct TfidfConfig {
    std::size_t min_df = 1;         // drop terms seen in fewer documents
    std::size_t max_vocab = 0;      // 0 = unlimited; otherwise keep most frequent terms
};

class TfidfModel {
public:
    static TfidfModel fit(std::span<const TokenizedText> corpus, const TfidfConfig& config = {});

    // Raw-count tf * idf, L2-normalized. All-unknown documents map to zero.
    std::vector<double> transform(const TokenizedText& doc) const;

    std::size_t dim() const { return idf_.size(); }
    const std::map<std::string, std::size_t>& vocabulary() const { return vocabulary_; }
    double idf(const std::string& term) const;

    nlohmann::json to_json() const;
    static TfidfModel from_json(const nlohmann::json& j);

private:
    std::map<std::string, std::size_t> vocabulary_;  // term -> dense column
    std::vector<double> idf_;
};

struct TemporalFeatures {
    std::vector<double> diff;     // h_t - h_{t-1}, zero vector for the first post's prev
    std::vector<double> product;  // h_t (elementwise) h_{t-1}
    double position = 0;          // normalized to [0,1]
};

TemporalFeatures temporal_features(std::span<const double> curr,
                                   std::optional<std::span<const double>> prev, int position,
                                   int timeline_len);

// Per-post vector [diff | product | position | 14 linguistic features].
std::vector<std::vector<double>> assemble_change_features(
    const Timeline& timeline, const std::vector<std::vector<double>>& representations,
    const WordList& negative, const WordList& positive);

// Names of the assembled blocks, for report headers.
std::vector<std::string> change_feature_names(std::size_t representation_dim);

// JSON-lines embeddings file, one {"post_id", "vector"} record per line.
std::map<std::string, std::vector<double>> load_embeddings_jsonl(std::string_view content);

}  // namespace mindtrace

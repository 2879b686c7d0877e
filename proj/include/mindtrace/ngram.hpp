#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindtrace/core.hpp"
#include "mindtrace/text_features.hpp"

namespace mindtrace {

// Evidence texts per (element, valence, subelement) label.
struct LabeledCorpus {
    std::map<LabelTriple, std::vector<std::string>> evidence;
};

struct TaggerConfig {
    int k = 25;         // signature n-grams kept per label
    int min_match = 1;  // matched n-grams required to assign a label
};

using Ngram = std::vector<std::string>;  // 2 or 3 cleaned tokens

struct ScoredNgram {
    Ngram ngram;
    double llr = 0;
    bool operator==(const ScoredNgram&) const = default;
};

struct SignatureSet {
    std::map<LabelTriple, std::vector<ScoredNgram>> signatures;
    std::vector<std::string> warnings;  // labels skipped for empty cleaned corpora

    nlohmann::json to_json() const;
    static SignatureSet from_json(const nlohmann::json& j);
};

// Dunning log-likelihood G^2 over a 2x2 contingency table, with 0*ln(0) := 0.
double llr_score(double k11, double k12, double k21, double k22);

// Lowercased tokens with stopwords removed; the shared preprocessing for
// signature extraction and matching.
std::vector<std::string> clean_tokens(std::string_view text, const WordList& stopwords);

SignatureSet extract_signatures(const LabeledCorpus& corpus, const WordList& stopwords,
                                const TaggerConfig& config);

std::set<LabelTriple> tag_post(const Post& post, const SignatureSet& signatures,
                               const WordList& stopwords, const TaggerConfig& config);

// Builds a labeled corpus from annotated timelines: evidence texts when a
// separate evidence corpus file supplies them, else whole post texts per label.
LabeledCorpus corpus_from_timelines(std::span<const Timeline> timelines);

}  // namespace mindtrace

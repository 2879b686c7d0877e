#include "mindtrace/ngram.hpp"

#include <algorithm>
#include <cmath>

namespace mindtrace {

using nlohmann::json;

double llr_score(double k11, double k12, double k21, double k22) {
    if (k11 < 0 || k12 < 0 || k21 < 0 || k22 < 0)
        throw RangeError("llr_score counts must be non-negative");
    const double total = k11 + k12 + k21 + k22;
    if (total <= 0) throw RangeError("llr_score requires a non-zero contingency table");

    const double r1 = k11 + k12, r2 = k21 + k22;
    const double c1 = k11 + k21, c2 = k12 + k22;
    auto term = [&](double k, double row, double col) {
        if (k <= 0) return 0.0;  // 0*ln(0) := 0
        const double expected = row * col / total;
        return k * std::log(k / expected);
    };
    double g2 = 2.0 * (term(k11, r1, c1) + term(k12, r1, c2) + term(k21, r2, c1) +
                       term(k22, r2, c2));
    return std::max(g2, 0.0);  // clip tiny negative rounding residue
}

std::vector<std::string> clean_tokens(std::string_view text, const WordList& stopwords) {
    std::vector<std::string> out;
    for (auto& tok : tokenize(text).tokens)
        if (!stopwords.contains(tok)) out.push_back(std::move(tok));
    return out;
}

namespace {

std::string ngram_key(const Ngram& g) {
    std::string key;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (i) key.push_back(' ');
        key += g[i];
    }
    return key;
}

void count_ngrams(const std::vector<std::string>& tokens, std::map<std::string, std::size_t>& out,
                  std::size_t& total) {
    for (std::size_t order : {std::size_t{2}, std::size_t{3}}) {
        if (tokens.size() < order) continue;
        for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
            std::string key = tokens[i];
            for (std::size_t j = 1; j < order; ++j) key += " " + tokens[i + j];
            ++out[key];
            ++total;
        }
    }
}

Ngram split_key(const std::string& key) {
    Ngram g;
    std::string cur;
    for (char c : key) {
        if (c == ' ') {
            g.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    g.push_back(cur);
    return g;
}

std::string label_key(const LabelTriple& t) {
    return t.element + "|" + t.valence + "|" + t.subelement;
}

LabelTriple parse_label_key(const std::string& key) {
    auto p1 = key.find('|');
    auto p2 = key.find('|', p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos)
        throw ValidationError("bad label key: " + key);
    return {key.substr(0, p1), key.substr(p1 + 1, p2 - p1 - 1), key.substr(p2 + 1)};
}

}  // namespace

SignatureSet extract_signatures(const LabeledCorpus& corpus, const WordList& stopwords,
                                const TaggerConfig& config) {
    if (config.k < 1) throw RangeError("tagger k must be >= 1");
    if (corpus.evidence.empty()) throw ValidationError("empty labeled corpus");

    // Per-label n-gram counts over cleaned evidence.
    std::map<LabelTriple, std::map<std::string, std::size_t>> counts;
    std::map<LabelTriple, std::size_t> totals;
    for (const auto& [label, texts] : corpus.evidence) {
        auto& c = counts[label];
        std::size_t& total = totals[label];
        for (const auto& text : texts) count_ngrams(clean_tokens(text, stopwords), c, total);
    }
    std::size_t grand_total = 0;
    for (const auto& [label, t] : totals) grand_total += t;

    SignatureSet out;
    for (const auto& [label, c] : counts) {
        if (totals[label] == 0) {
            out.warnings.push_back("label skipped, empty cleaned corpus: " + label_key(label));
            continue;
        }
        const double rest_total = static_cast<double>(grand_total - totals[label]);
        std::vector<ScoredNgram> scored;
        for (const auto& [key, k11] : c) {
            // Occurrences of this n-gram in the union of all other labels.
            std::size_t rest = 0;
            for (const auto& [other, oc] : counts) {
                if (other == label) continue;
                auto it = oc.find(key);
                if (it != oc.end()) rest += it->second;
            }
            const double k12 = static_cast<double>(rest);
            const double k21 = static_cast<double>(totals[label] - k11);
            const double k22 = rest_total - k12;
            scored.push_back({split_key(key), llr_score(static_cast<double>(k11), k12, k21, k22)});
        }
        std::sort(scored.begin(), scored.end(), [](const ScoredNgram& a, const ScoredNgram& b) {
            return a.llr != b.llr ? a.llr > b.llr : a.ngram < b.ngram;
        });
        if (scored.size() > static_cast<std::size_t>(config.k))
            scored.resize(static_cast<std::size_t>(config.k));
        out.signatures[label] = std::move(scored);
    }
    return out;
}

std::set<LabelTriple> tag_post(const Post& post, const SignatureSet& signatures,
                               const WordList& stopwords, const TaggerConfig& config) {
    if (signatures.signatures.empty()) throw ValidationError("empty signature set");
    const auto tokens = clean_tokens(post.text, stopwords);

    std::set<std::string> present;
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    count_ngrams(tokens, counts, total);
    for (const auto& [key, n] : counts) present.insert(key);

    std::set<LabelTriple> out;
    for (const auto& [label, sigs] : signatures.signatures) {
        int matched = 0;
        for (const auto& s : sigs)
            if (present.count(ngram_key(s.ngram))) ++matched;
        if (matched >= config.min_match) out.insert(label);
    }
    return out;
}

LabeledCorpus corpus_from_timelines(std::span<const Timeline> timelines) {
    LabeledCorpus corpus;
    for (const auto& t : timelines)
        for (const auto& p : t.posts) {
            if (!p.gold_annotation || p.text.empty()) continue;
            for (const auto& label : p.gold_annotation->labels)
                corpus.evidence[label].push_back(p.text);
        }
    return corpus;
}

json SignatureSet::to_json() const {
    json j = json::object();
    for (const auto& [label, sigs] : signatures) {
        json arr = json::array();
        for (const auto& s : sigs) arr.push_back({{"ngram", s.ngram}, {"llr", s.llr}});
        j[label_key(label)] = std::move(arr);
    }
    json root{{"signatures", std::move(j)}};
    if (!warnings.empty()) root["warnings"] = warnings;
    return root;
}

SignatureSet SignatureSet::from_json(const json& j) {
    SignatureSet out;
    const json& sigs = j.contains("signatures") ? j.at("signatures") : j;
    for (const auto& [key, arr] : sigs.items()) {
        auto& list = out.signatures[parse_label_key(key)];
        for (const auto& e : arr)
            list.push_back({e.at("ngram").get<Ngram>(), e.at("llr").get<double>()});
    }
    if (j.contains("warnings")) out.warnings = j.at("warnings").get<std::vector<std::string>>();
    return out;
}

}  // namespace mindtrace

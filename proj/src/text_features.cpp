#include "mindtrace/text_features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace mindtrace {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }

// Whitespace-split words; denominator for avg_word_len and the lexicon
// fractions.
std::vector<std::string> whitespace_words(std::string_view raw) {
    std::vector<std::string> words;
    std::string cur;
    for (unsigned char c : raw) {
        if (std::isspace(c)) {
            if (!cur.empty()) words.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

std::string lower_alnum(std::string_view w) {
    std::string out;
    for (unsigned char c : w)
        if (is_word_char(c)) out.push_back(static_cast<char>(std::tolower(c)));
    return out;
}

std::string trimmed(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace

TokenizedText tokenize(std::string_view raw) {
    TokenizedText out;
    out.raw = std::string(raw);
    std::string cur;
    for (unsigned char c : raw) {
        if (is_word_char(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.tokens.push_back(std::move(cur));

    // Sentence count: non-empty segments after splitting on runs of [.!?].
    bool segment_nonempty = false;
    for (char ch : raw) {
        if (ch == '.' || ch == '!' || ch == '?') {
            if (segment_nonempty) ++out.sentences;
            segment_nonempty = false;
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            segment_nonempty = true;
        }
    }
    if (segment_nonempty) ++out.sentences;
    return out;
}

WordList::WordList(std::vector<std::string> words) {
    for (auto& w : words) words_.insert(std::move(w));
}

WordList WordList::load(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        std::string w = trimmed(line);
        if (!w.empty() && w[0] != '#') words.push_back(std::move(w));
    }
    return WordList(std::move(words));
}

bool WordList::contains(std::string_view w) const {
    return words_.count(std::string(w)) > 0;
}

std::array<double, LinguisticFeatures::kCount> LinguisticFeatures::as_array() const {
    return {log_len,   n_sentences, avg_word_len, frac_upper,        frac_punct,
            n_exclaim, n_question,  n_ellipsis,   emo_punct,         frac_neg,
            frac_pos,  sentiment_balance, words_per_sent, has_removed};
}

const std::array<const char*, LinguisticFeatures::kCount>& LinguisticFeatures::names() {
    static const std::array<const char*, kCount> kNames = {
        "log_len",   "n_sentences", "avg_word_len",      "frac_upper",     "frac_punct",
        "n_exclaim", "n_question",  "n_ellipsis",        "emo_punct",      "frac_neg",
        "frac_pos",  "sentiment_balance", "words_per_sent", "has_removed"};
    return kNames;
}

LinguisticFeatures linguistic_features(std::string_view raw, const WordList& negative,
                                       const WordList& positive) {
    LinguisticFeatures f;
    const auto words = whitespace_words(raw);
    const double n_words = static_cast<double>(words.size());

    f.log_len = std::log(1.0 + n_words);

    const TokenizedText tok = tokenize(raw);
    f.n_sentences = tok.sentences;

    if (!words.empty()) {
        double total_len = 0;
        for (const auto& w : words) total_len += static_cast<double>(w.size());
        f.avg_word_len = total_len / n_words;
    }

    std::size_t n_chars = raw.size(), n_upper = 0, n_punct = 0;
    for (unsigned char c : raw) {
        if (std::isupper(c)) ++n_upper;
        if (c == '!' || c == '?' || c == '.' || c == ',' || c == ';' || c == ':') ++n_punct;
        if (c == '!') f.n_exclaim += 1;
        if (c == '?') f.n_question += 1;
    }
    if (n_chars > 0) {
        f.frac_upper = static_cast<double>(n_upper) / static_cast<double>(n_chars);
        f.frac_punct = static_cast<double>(n_punct) / static_cast<double>(n_chars);
    }

    for (std::size_t i = 0; i + 2 < raw.size();) {
        if (raw[i] == '.' && raw[i + 1] == '.' && raw[i + 2] == '.') {
            f.n_ellipsis += 1;
            i += 3;
        } else {
            ++i;
        }
    }

    f.emo_punct = std::min(f.n_exclaim + f.n_question, 10.0);

    if (!words.empty()) {
        double neg = 0, pos = 0;
        for (const auto& w : words) {
            const std::string key = lower_alnum(w);
            if (key.empty()) continue;
            if (negative.contains(key)) neg += 1;
            if (positive.contains(key)) pos += 1;
        }
        f.frac_neg = neg / n_words;
        f.frac_pos = pos / n_words;
    }
    f.sentiment_balance = f.frac_neg - f.frac_pos;

    f.words_per_sent = tok.sentences > 0 ? n_words / tok.sentences : 0.0;

    const std::string body = trimmed(raw);
    f.has_removed = (body == "[removed]" || body == "[deleted]") ? 1.0 : 0.0;
    return f;
}

TfidfModel TfidfModel::fit(std::span<const TokenizedText> corpus, const TfidfConfig& config) {
    if (corpus.empty()) throw ValidationError("tfidf fit requires a non-empty corpus");

    std::map<std::string, std::size_t> df;  // ordered: deterministic vocabulary
    std::map<std::string, std::size_t> total_tf;
    for (const auto& doc : corpus) {
        std::map<std::string, std::size_t> seen;
        for (const auto& t : doc.tokens) ++seen[t];
        for (const auto& [term, tf] : seen) {
            ++df[term];
            total_tf[term] += tf;
        }
    }

    std::vector<std::string> terms;
    for (const auto& [term, count] : df)
        if (count >= config.min_df) terms.push_back(term);

    if (config.max_vocab > 0 && terms.size() > config.max_vocab) {
        std::sort(terms.begin(), terms.end(), [&](const std::string& a, const std::string& b) {
            auto ta = total_tf.at(a), tb = total_tf.at(b);
            return ta != tb ? ta > tb : a < b;
        });
        terms.resize(config.max_vocab);
        std::sort(terms.begin(), terms.end());
    }

    TfidfModel m;
    const double n_docs = static_cast<double>(corpus.size());
    m.idf_.reserve(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        m.vocabulary_[terms[i]] = i;
        // Smoothed idf: ln((1+N)/(1+df)) + 1.
        m.idf_.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[terms[i]]))) +
                         1.0);
    }
    return m;
}

std::vector<double> TfidfModel::transform(const TokenizedText& doc) const {
    std::vector<double> v(idf_.size(), 0.0);
    for (const auto& t : doc.tokens) {
        auto it = vocabulary_.find(t);
        if (it != vocabulary_.end()) v[it->second] += 1.0;
    }
    double norm_sq = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] *= idf_[i];
        norm_sq += v[i] * v[i];
    }
    if (norm_sq > 0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& x : v) x *= inv;
    }
    return v;
}

nlohmann::json TfidfModel::to_json() const {
    std::vector<std::string> terms(idf_.size());
    for (const auto& [term, idx] : vocabulary_) terms[idx] = term;
    return nlohmann::json{{"terms", terms}, {"idf", idf_}};
}

TfidfModel TfidfModel::from_json(const nlohmann::json& j) {
    TfidfModel m;
    const auto terms = j.at("terms").get<std::vector<std::string>>();
    m.idf_ = j.at("idf").get<std::vector<double>>();
    if (terms.size() != m.idf_.size())
        throw ValidationError("tfidf model: terms and idf lengths differ");
    for (std::size_t i = 0; i < terms.size(); ++i) m.vocabulary_[terms[i]] = i;
    return m;
}

double TfidfModel::idf(const std::string& term) const {
    auto it = vocabulary_.find(term);
    if (it == vocabulary_.end()) throw ValidationError("term not in vocabulary: " + term);
    return idf_[it->second];
}

TemporalFeatures temporal_features(std::span<const double> curr,
                                   std::optional<std::span<const double>> prev, int position,
                                   int timeline_len) {
    if (timeline_len < 1) throw RangeError("timeline_len must be >= 1");
    if (prev && prev->size() != curr.size())
        throw ValidationError("temporal_features dimension mismatch: curr " +
                              std::to_string(curr.size()) + " vs prev " +
                              std::to_string(prev->size()));
    TemporalFeatures out;
    out.diff.resize(curr.size());
    out.product.resize(curr.size());
    for (std::size_t i = 0; i < curr.size(); ++i) {
        const double p = prev ? (*prev)[i] : 0.0;
        out.diff[i] = curr[i] - p;
        out.product[i] = curr[i] * p;
    }
    out.position = timeline_len == 1 ? 0.0
                                     : static_cast<double>(position) /
                                           static_cast<double>(timeline_len - 1);
    return out;
}

std::vector<std::vector<double>> assemble_change_features(
    const Timeline& timeline, const std::vector<std::vector<double>>& representations,
    const WordList& negative, const WordList& positive) {
    if (representations.size() != timeline.posts.size())
        throw ValidationError("assemble_change_features: " + std::to_string(representations.size()) +
                              " representations for " + std::to_string(timeline.posts.size()) +
                              " posts");
    const int n = static_cast<int>(timeline.posts.size());
    std::vector<std::vector<double>> out;
    out.reserve(timeline.posts.size());
    for (int i = 0; i < n; ++i) {
        std::optional<std::span<const double>> prev;
        if (i > 0) prev = std::span<const double>(representations[i - 1]);
        TemporalFeatures tf = temporal_features(representations[i], prev, i, n);
        const auto ling = linguistic_features(timeline.posts[i].text, negative, positive).as_array();

        std::vector<double> row;
        row.reserve(tf.diff.size() + tf.product.size() + 1 + ling.size());
        row.insert(row.end(), tf.diff.begin(), tf.diff.end());
        row.insert(row.end(), tf.product.begin(), tf.product.end());
        row.push_back(tf.position);
        row.insert(row.end(), ling.begin(), ling.end());
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<std::string> change_feature_names(std::size_t representation_dim) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < representation_dim; ++i)
        names.push_back("diff_" + std::to_string(i));
    for (std::size_t i = 0; i < representation_dim; ++i)
        names.push_back("product_" + std::to_string(i));
    names.push_back("position");
    for (const char* n : LinguisticFeatures::names()) names.push_back(n);
    return names;
}

std::map<std::string, std::vector<double>> load_embeddings_jsonl(std::string_view content) {
    std::map<std::string, std::vector<double>> out;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t dim = 0, line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("embeddings line " + std::to_string(line_no) + ": " + e.what(),
                             e.byte);
        }
        std::vector<double> v = j.at("vector").get<std::vector<double>>();
        if (out.empty())
            dim = v.size();
        else if (v.size() != dim)
            throw ValidationError("embeddings line " + std::to_string(line_no) +
                                  ": dimension mismatch");
        out[j.at("post_id").get<std::string>()] = std::move(v);
    }
    return out;
}

}  // namespace mindtrace

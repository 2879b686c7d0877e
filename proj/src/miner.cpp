#include "mindtrace/miner.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "mindtrace/text_features.hpp"

namespace mindtrace {

using nlohmann::json;

namespace {

// Third-vs-third well-being delta over the posts that carry a score.
std::optional<double> trajectory_delta(const Timeline& timeline) {
    std::vector<double> scores;
    for (const auto& p : timeline.posts)
        if (p.wellbeing) scores.push_back(static_cast<double>(*p.wellbeing));
    if (scores.empty()) return std::nullopt;
    const std::size_t k = std::max<std::size_t>(1, (scores.size() + 2) / 3);
    double first = 0, last = 0;
    for (std::size_t i = 0; i < k; ++i) first += scores[i];
    for (std::size_t i = scores.size() - k; i < scores.size(); ++i) last += scores[i];
    return (last - first) / static_cast<double>(k);
}

}  // namespace

Direction classify_trajectory(const SequenceBundle& bundle, const MinerConfig& config) {
    SummaryConfig sc;
    sc.direction_threshold = config.direction_threshold;
    const Direction d = derive_direction(bundle.timeline, sc);
    if (d != Direction::fluctuation) return d;
    const auto delta = trajectory_delta(bundle.timeline);
    if (delta && *delta > 0) return Direction::improvement;
    return Direction::deterioration;  // ties and absent scores are conservative
}

std::string format_bundle(const SequenceBundle& bundle) {
    std::ostringstream out;
    out << "sequence " << bundle.sequence_id << "\n";
    for (const auto& p : bundle.timeline.posts) {
        out << "post " << p.position;
        if (p.gold_annotation) {
            const auto& ann = *p.gold_annotation;
            if (!ann.labels.empty()) {
                out << " |";
                for (const auto& l : ann.labels) {
                    std::string abbrev(1, static_cast<char>(std::toupper(
                                              static_cast<unsigned char>(l.element[0]))));
                    out << " " << abbrev << (l.valence == kValenceAdaptive ? "-adp:" : "-mal:")
                        << l.subelement;
                }
            }
            out << " | presence a=" << (ann.adaptive_presence ? std::to_string(*ann.adaptive_presence) : "-")
                << " m=" << (ann.maladaptive_presence ? std::to_string(*ann.maladaptive_presence) : "-");
        }
        if (p.wellbeing) out << " | wb=" << *p.wellbeing;
        if (p.gold_change && p.gold_change->switch_flag) out << " | switch";
        if (p.gold_change && p.gold_change->escalation) out << " | escalation";
        out << "\n";
    }
    if (bundle.gold_summary) out << "summary: " << *bundle.gold_summary << "\n";
    return out.str();
}

std::vector<std::vector<const SequenceBundle*>> batch_sequences(
    std::span<const SequenceBundle> bundles, int batch_size) {
    if (batch_size < 1) throw RangeError("batch_size must be >= 1");
    std::vector<std::vector<const SequenceBundle*>> batches;
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        if (i % static_cast<std::size_t>(batch_size) == 0) batches.emplace_back();
        batches.back().push_back(&bundles[i]);
    }
    return batches;
}

std::string extract_batch_patterns(std::span<const SequenceBundle* const> batch,
                                   const LlmClient& client) {
    if (batch.empty()) throw ValidationError("extract_batch_patterns: empty batch");
    std::ostringstream prompt;
    prompt << "Below are " << batch.size()
           << " annotated post sequences (ABCD self-state labels, presence scores, "
              "well-being, change markers).\n"
           << "List the recurring ABCD dynamics you observe across these sequences as "
              "short bullet points.\n\n";
    for (const auto* b : batch) prompt << format_bundle(*b) << "\n";
    const std::string response = client.complete(prompt.str());
    if (response.empty()) throw ValidationError("empty pattern response");
    return response;
}

std::size_t word_count(std::string_view text) {
    std::size_t count = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++count;
        in_word = !space;
    }
    return count;
}

std::string truncate_words(const std::string& text, std::size_t max_words) {
    if (word_count(text) <= max_words) return text;
    // Collect word end offsets.
    std::vector<std::size_t> ends;
    bool in_word = false;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        const bool space =
            i == text.size() || std::isspace(static_cast<unsigned char>(text[i])) != 0;
        if (space && in_word) ends.push_back(i);
        in_word = !space && i < text.size();
    }
    const std::size_t hard_end = ends[max_words - 1];
    // Prefer the last sentence boundary within the first max_words words.
    std::size_t cut = std::string::npos;
    for (std::size_t i = 0; i < hard_end; ++i)
        if (text[i] == '.' || text[i] == '!' || text[i] == '?') cut = i + 1;
    std::string out = text.substr(0, cut == std::string::npos ? hard_end : cut);
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    return out;
}

namespace {

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0;
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

std::set<std::string> token_set(std::string_view text) {
    auto toks = tokenize(text).tokens;
    return {toks.begin(), toks.end()};
}

}  // namespace

DynamicSignature synthesize_signature(std::span<const std::string> patterns, Direction direction,
                                      std::span<const SequenceBundle> bundles,
                                      const LlmClient& client) {
    if (patterns.empty()) throw ValidationError("synthesize_signature: no stage-1 patterns");

    std::vector<std::string> candidate_ids;
    for (const auto& b : bundles) candidate_ids.push_back(b.sequence_id);

    auto build_prompt = [&](bool compress) {
        std::ostringstream prompt;
        prompt << "You are synthesizing recurrent dynamic signatures of psychological "
               << to_string(direction) << ".\n"
               << "Below are pattern lists extracted from batches of annotated sequences. "
                  "Synthesize them into ONE signature of at most 90 words describing the "
                  "recurring ABCD dynamic, plus 5-10 exemplar sequence ids chosen from the "
                  "candidates.\n";
        if (compress)
            prompt << "Your previous signature exceeded 90 words. Compress it to at most 90 "
                      "words.\n";
        prompt << "\nCandidate sequence ids:";
        for (const auto& id : candidate_ids) prompt << " " << id;
        prompt << "\n\nBatch patterns:\n";
        for (std::size_t i = 0; i < patterns.size(); ++i)
            prompt << "--- batch " << i + 1 << " ---\n" << patterns[i] << "\n";
        prompt << "\nRespond with exactly one JSON object "
                  "{\"signature\": string, \"exemplars\": [string, ...]}.\n";
        return prompt.str();
    };

    static const FieldSpec kSchema[] = {{"signature", json::value_t::string}};
    auto ask = [&](bool compress) {
        const std::string prompt = build_prompt(compress);
        const std::string raw = client.complete(prompt);
        return parse_validated(
            raw, kSchema, [&] { return client.complete(prompt + "\n" + format_reminder()); },
            client.config().max_retries);
    };

    json j = ask(false);
    std::string text = j.at("signature").get<std::string>();
    if (word_count(text) > 90) {
        // One compression retry, then hard enforcement.
        j = ask(true);
        text = j.at("signature").get<std::string>();
        if (word_count(text) > 90) text = truncate_words(text, 90);
    }

    // Exemplars: model-supplied ids kept when valid, then padded by lexical
    // overlap with the signature, capped at 10. Never trusted blindly.
    std::vector<std::string> exemplars;
    std::set<std::string> taken;
    const std::set<std::string> valid(candidate_ids.begin(), candidate_ids.end());
    if (j.contains("exemplars") && j.at("exemplars").is_array()) {
        for (const auto& e : j.at("exemplars")) {
            if (!e.is_string()) continue;
            const std::string id = e.get<std::string>();
            if (valid.count(id) && taken.insert(id).second) exemplars.push_back(id);
        }
    }
    if (exemplars.size() > 10) exemplars.resize(10);
    if (exemplars.size() < 5) {
        const auto sig_tokens = token_set(text);
        std::vector<std::pair<double, std::string>> ranked;
        for (const auto& b : bundles) {
            if (taken.count(b.sequence_id)) continue;
            std::string all_text;
            for (const auto& p : b.timeline.posts) all_text += p.text + " ";
            ranked.emplace_back(jaccard(sig_tokens, token_set(all_text)), b.sequence_id);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        for (const auto& [score, id] : ranked) {
            if (exemplars.size() >= 5) break;
            exemplars.push_back(id);
        }
    }

    DynamicSignature sig;
    sig.direction = direction;
    sig.text = std::move(text);
    sig.exemplar_ids = std::move(exemplars);
    return sig;
}

MiningResult mine_signatures(std::span<const SequenceBundle> bundles, const LlmClient& client,
                             const MinerConfig& config) {
    std::map<Direction, std::vector<SequenceBundle>> grouped;
    for (const auto& b : bundles) grouped[classify_trajectory(b, config)].push_back(b);

    MiningResult result;
    for (auto& [direction, group] : grouped) {
        const std::string key = to_string(direction);
        const auto batches = batch_sequences(group, config.batch_size);
        std::vector<std::string> patterns;
        for (std::size_t i = 0; i < batches.size(); ++i) {
            try {
                patterns.push_back(extract_batch_patterns(batches[i], client));
            } catch (const Error& e) {
                throw Error("stage-1 batch " + std::to_string(i) + " (" + key + "): " + e.what());
            }
        }
        result.stage1_log[key] = patterns;
        result.signatures[key] = synthesize_signature(patterns, direction, group, client);
    }
    return result;
}

json DynamicSignature::to_json() const {
    return json{{"direction", mindtrace::to_string(direction)},
                {"signature", text},
                {"exemplars", exemplar_ids}};
}

json MiningResult::to_json() const {
    json j = json::object();
    for (const auto& [key, sig] : signatures)
        j[key] = {{"signature", sig.text}, {"exemplars", sig.exemplar_ids}};
    json audit = json::object();
    for (const auto& [key, logs] : stage1_log) audit[key] = logs;
    return json{{"signatures", std::move(j)}, {"stage1_audit", std::move(audit)}};
}

}  // namespace mindtrace

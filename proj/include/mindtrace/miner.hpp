#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindtrace/llm.hpp"
#include "mindtrace/summary.hpp"

namespace mindtrace {

struct SequenceBundle {
    std::string sequence_id;
    Timeline timeline;  // posts with ABCD labels, presence, well-being, changes
    std::optional<std::string> gold_summary;
};

struct MinerConfig {
    int batch_size = 10;
    double direction_threshold = 0.5;
};

// derive_direction with fluctuation collapsed to the larger absolute
// third-vs-third delta; ties go to deterioration.
Direction classify_trajectory(const SequenceBundle& bundle, const MinerConfig& config = {});

// Deterministic per-post rendering: position, abbreviated ABCD labels,
// presence pair, well-being, change markers; gold summary appended when
// present.
std::string format_bundle(const SequenceBundle& bundle);

std::vector<std::vector<const SequenceBundle*>> batch_sequences(
    std::span<const SequenceBundle> bundles, int batch_size);

// Stage 1: one validated LLM call per batch.
std::string extract_batch_patterns(std::span<const SequenceBundle* const> batch,
                                   const LlmClient& client);

struct DynamicSignature {
    Direction direction = Direction::deterioration;
    std::string text;                       // <= 90 words, enforced
    std::vector<std::string> exemplar_ids;  // 5..10 ids of the same direction

    nlohmann::json to_json() const;
};

// Stage 2: one aggregation call (plus at most one compression retry) per
// direction; word-count and exemplar invariants are enforced post-hoc.
DynamicSignature synthesize_signature(std::span<const std::string> patterns, Direction direction,
                                      std::span<const SequenceBundle> bundles,
                                      const LlmClient& client);

struct MiningResult {
    std::map<std::string, DynamicSignature> signatures;          // keyed by direction name
    std::map<std::string, std::vector<std::string>> stage1_log;  // raw pattern texts

    nlohmann::json to_json() const;
};

MiningResult mine_signatures(std::span<const SequenceBundle> bundles, const LlmClient& client,
                             const MinerConfig& config = {});

// Whitespace word count; the unit for the 90-word cap.
std::size_t word_count(std::string_view text);

// Truncation at the last sentence boundary within max_words, else a hard cut.
std::string truncate_words(const std::string& text, std::size_t max_words);

}  // namespace mindtrace

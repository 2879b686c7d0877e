#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mindtrace/errors.hpp"

namespace mindtrace {

inline constexpr const char* kValenceAdaptive = "adaptive";
inline constexpr const char* kValenceMaladaptive = "maladaptive";

struct LabelTriple {
    std::string element;
    std::string valence;  // "adaptive" | "maladaptive"
    std::string subelement;

    auto operator<=>(const LabelTriple&) const = default;
};

struct ChangeLabel {
    bool switch_flag = false;
    bool escalation = false;
    std::optional<std::string> justification;

    bool operator==(const ChangeLabel&) const = default;
};

struct PostAnnotation {
    std::set<LabelTriple> labels;
    std::optional<int> adaptive_presence;    // 1..5 when set
    std::optional<int> maladaptive_presence; // 1..5 when set

    bool operator==(const PostAnnotation&) const = default;
};

struct Post {
    std::string post_id;
    int position = 0;  // 0-based, unique and contiguous within a timeline
    std::string text;  // may be empty or the literal "[removed]"/"[deleted]"
    std::optional<int> wellbeing;
    std::optional<PostAnnotation> gold_annotation;
    std::optional<ChangeLabel> gold_change;

    bool operator==(const Post&) const = default;
};

struct Timeline {
    std::string timeline_id;
    std::vector<Post> posts;  // sorted by position ascending, non-empty

    bool operator==(const Timeline&) const = default;
};

// The (element, valence, subelement) label space. Loaded from data, not
// hard-coded; the one-hot dimension is sum(|subelements|) * 2 valences.
class LabelSchema {
public:
    static LabelSchema from_json(const nlohmann::json& j);
    static LabelSchema load(const std::string& path);

    const std::vector<std::string>& elements() const { return elements_; }
    const std::vector<std::string>& subelements(const std::string& element) const;
    bool contains(const LabelTriple& t) const;
    // Dense index in schema enumeration order (element, then subelement,
    // adaptive before maladaptive). Throws ValidationError for unknown triples.
    std::size_t index_of(const LabelTriple& t) const;
    std::size_t one_hot_dim() const { return 2 * total_subelements_; }
    std::vector<LabelTriple> enumerate() const;

private:
    std::vector<std::string> elements_;
    std::map<std::string, std::vector<std::string>> subelements_;
    std::map<LabelTriple, std::size_t> index_;
    std::size_t total_subelements_ = 0;
};

// Parses and validates one timeline document. When a schema is given, every
// annotation label is checked against it.
Timeline parse_timeline(std::string_view bytes, const LabelSchema* schema = nullptr);
Timeline timeline_from_json(const nlohmann::json& j, const LabelSchema* schema = nullptr);

// Accepts either a single timeline object or a top-level array of them.
std::vector<Timeline> parse_timelines(std::string_view bytes, const LabelSchema* schema = nullptr);

nlohmann::json timeline_to_json(const Timeline& t);

// Up to `size` posts strictly preceding `index`, oldest first.
std::vector<Post> context_window(const Timeline& t, int index, int size);

// File helpers shared across modules.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace mindtrace

#include "mindtrace/summary.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mindtrace {

using nlohmann::json;

std::string to_string(Transition t) {
    return t == Transition::switch_event ? "switch" : "escalation";
}

std::string to_string(Direction d) {
    switch (d) {
        case Direction::deterioration: return "deterioration";
        case Direction::improvement: return "improvement";
        default: return "fluctuation";
    }
}

std::pair<double, double> compute_dominance(const Timeline& timeline,
                                            const SummaryConfig& config) {
    double m = 0, a = 0;
    std::size_t m_count = 0, a_count = 0;
    for (const auto& p : timeline.posts) {
        if (!p.gold_annotation) continue;
        if (p.gold_annotation->maladaptive_presence) {
            m += *p.gold_annotation->maladaptive_presence;
            ++m_count;
        }
        if (p.gold_annotation->adaptive_presence) {
            a += *p.gold_annotation->adaptive_presence;
            ++a_count;
        }
    }
    if (config.aggregate_mean) {
        if (m_count > 0) m /= static_cast<double>(m_count);
        if (a_count > 0) a /= static_cast<double>(a_count);
    }
    return {m, a};
}

Transition derive_transition(const Timeline& timeline) {
    bool any_escalation = false;
    for (const auto& p : timeline.posts) {
        if (!p.gold_change) continue;
        if (p.gold_change->switch_flag) return Transition::switch_event;
        if (p.gold_change->escalation) any_escalation = true;
    }
    (void)any_escalation;  // escalation is also the no-change default framing
    return Transition::escalation;
}

Direction derive_direction(const Timeline& timeline, const SummaryConfig& config) {
    std::vector<double> scores;
    for (const auto& p : timeline.posts)
        if (p.wellbeing) scores.push_back(static_cast<double>(*p.wellbeing));
    if (scores.empty()) return Direction::fluctuation;

    const std::size_t k = std::max<std::size_t>(1, (scores.size() + 2) / 3);
    double first = 0, last = 0;
    for (std::size_t i = 0; i < k; ++i) first += scores[i];
    for (std::size_t i = scores.size() - k; i < scores.size(); ++i) last += scores[i];
    const double delta = (last - first) / static_cast<double>(k);
    if (delta > config.direction_threshold) return Direction::improvement;
    if (delta < -config.direction_threshold) return Direction::deterioration;
    return Direction::fluctuation;
}

SummaryInputs summary_inputs(const Timeline& timeline, const SummaryConfig& config) {
    SummaryInputs in;
    std::tie(in.maladaptive_total, in.adaptive_total) = compute_dominance(timeline, config);
    in.transition = derive_transition(timeline);
    in.direction = derive_direction(timeline, config);
    for (const auto& p : timeline.posts) {
        if (!p.gold_annotation) continue;
        for (const auto& l : p.gold_annotation->labels)
            (l.valence == kValenceAdaptive ? in.adaptive_features : in.maladaptive_features)
                .insert(l.subelement);
    }
    return in;
}

namespace {

std::string render_feature_list(const std::set<std::string>& features, std::size_t cap) {
    std::string out;
    std::size_t i = 0;
    for (const auto& f : features) {  // std::set iterates sorted
        if (i++ == cap) break;
        if (!out.empty()) out += ", ";
        out += f;
    }
    return out;
}

}  // namespace

StructuredSummary render_summary(const SummaryInputs& in, const SummaryConfig& config) {
    StructuredSummary s;

    s.central_theme =
        "The central psychological theme across the sequence reflects an evolving interaction "
        "between maladaptive distress and adaptive coping processes expressed through affect, "
        "cognition, behavior, and desire.";

    if (in.maladaptive_total >= in.adaptive_total) {
        s.initial_state =
            "Initially, maladaptive self-state processes are more dominant, characterized by "
            "elements such as " +
            render_feature_list(in.maladaptive_features, config.max_features) +
            ", while adaptive processes remain less prominent.";
    } else {
        s.initial_state =
            "Initially, adaptive self-state processes are more dominant, characterized by "
            "elements such as " +
            render_feature_list(in.adaptive_features, config.max_features) +
            ", buffering against maladaptive tendencies.";
    }

    if (in.maladaptive_total > in.adaptive_total) {
        s.interaction_dynamics =
            "Maladaptive dynamics intensify over time through reinforcing cycles of negative "
            "affect, self-critical cognition, and behavioral withdrawal, suppressing adaptive "
            "functioning.";
    } else {
        s.interaction_dynamics =
            "Adaptive processes strengthen over time through increasing self-compassion, "
            "relational engagement, and constructive coping that counter maladaptive tendencies.";
    }

    if (in.transition == Transition::switch_event) {
        s.transition =
            "A transition point emerges within the sequence, reflecting a shift in the balance "
            "between adaptive and maladaptive self-states.";
    } else {
        s.transition =
            "An escalation unfolds across the sequence, reflecting progressive intensification "
            "of emotional, cognitive, and behavioural processes over time.";
    }

    switch (in.direction) {
        case Direction::deterioration:
            s.outcome =
                "In the later phase, maladaptive self-state dynamics dominate, reinforcing "
                "sustained distress and hopelessness.";
            break;
        case Direction::improvement:
            s.outcome =
                "In the later phase, adaptive self-state dynamics become dominant, supporting "
                "resilience and psychological recovery.";
            break;
        case Direction::fluctuation:
            s.outcome =
                "In the later phase, adaptive and maladaptive self-states remain in tension, "
                "reflecting ongoing fluctuation between distress and coping.";
            break;
    }

    s.global_closers =
        "As the sequence progresses, adaptive and maladaptive self-states increasingly interact, "
        "creating periods of internal conflict, reflection, and shifting psychological balance. "
        "Across the sequence, adaptive and maladaptive self-states alternate in dominance and "
        "suppression, shaping the overall trajectory of psychological change.";

    s.text = s.central_theme + " " + s.initial_state + " " + s.interaction_dynamics + " " +
             s.transition + " " + s.outcome + " " + s.global_closers;
    return s;
}

json StructuredSummary::to_json() const {
    return json{{"central_theme", central_theme},
                {"initial_state", initial_state},
                {"interaction_dynamics", interaction_dynamics},
                {"transition", transition},
                {"outcome", outcome},
                {"global_closers", global_closers},
                {"text", text}};
}

}  // namespace mindtrace

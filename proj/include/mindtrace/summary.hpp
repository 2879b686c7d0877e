#pragma once

#include <set>
#include <string>
#include <utility>

#include <json.hpp>

#include "mindtrace/core.hpp"

namespace mindtrace {

enum class Transition { switch_event, escalation };
enum class Direction { deterioration, improvement, fluctuation };

std::string to_string(Transition t);
std::string to_string(Direction d);

struct SummaryConfig {
    double direction_threshold = 0.5;  // third-vs-third well-being delta
    std::size_t max_features = 5;      // feature labels rendered per list
    bool aggregate_mean = false;       // mean instead of sum for dominance totals
};

struct SummaryInputs {
    double maladaptive_total = 0;  // M
    double adaptive_total = 0;     // A
    std::set<std::string> adaptive_features;
    std::set<std::string> maladaptive_features;
    Transition transition = Transition::escalation;
    Direction direction = Direction::fluctuation;
};

// (M, A): totals of the per-post presence ratings, absent -> 0.
std::pair<double, double> compute_dominance(const Timeline& timeline,
                                            const SummaryConfig& config = {});

// switch if any post switches, else escalation (also the no-change default).
Transition derive_transition(const Timeline& timeline);

// Mean well-being of the final third minus the first third, against
// +/- direction_threshold; all scores absent -> fluctuation.
Direction derive_direction(const Timeline& timeline, const SummaryConfig& config = {});

// Convenience: dominance, transition, direction and the rendered feature
// sets (subelement labels of the gold annotations) from one timeline.
SummaryInputs summary_inputs(const Timeline& timeline, const SummaryConfig& config = {});

struct StructuredSummary {
    std::string central_theme;
    std::string initial_state;
    std::string interaction_dynamics;
    std::string transition;
    std::string outcome;
    std::string global_closers;  // the two trailing integrative statements
    std::string text;            // parts joined with single spaces

    nlohmann::json to_json() const;
};

StructuredSummary render_summary(const SummaryInputs& inputs, const SummaryConfig& config = {});

}  // namespace mindtrace

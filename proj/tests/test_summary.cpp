#include <doctest.h>

#include "mindtrace/summary.hpp"

using namespace mindtrace;

namespace {

Post annotated(const std::string& id, int pos, std::optional<int> adaptive,
               std::optional<int> maladaptive, std::optional<int> wellbeing = {}) {
    Post p{id, pos, "text", wellbeing, PostAnnotation{}, {}};
    p.gold_annotation->adaptive_presence = adaptive;
    p.gold_annotation->maladaptive_presence = maladaptive;
    return p;
}

}  // namespace

TEST_CASE("dominance totals with sum and mean aggregation") {
    Timeline t;
    t.timeline_id = "t";
    t.posts = {annotated("a", 0, 2, 5), annotated("b", 1, 4, 3),
               Post{"c", 2, "no annotation", {}, {}, {}}};
    auto [m, a] = compute_dominance(t);
    CHECK(m == 8);
    CHECK(a == 6);

    SummaryConfig mean_cfg;
    mean_cfg.aggregate_mean = true;
    auto [mm, ma] = compute_dominance(t, mean_cfg);
    CHECK(mm == 4);
    CHECK(ma == 3);
}

TEST_CASE("transition precedence: any switch beats escalation") {
    Timeline t;
    t.timeline_id = "t";
    t.posts = {Post{"a", 0, "x", {}, {}, {}},
               Post{"b", 1, "x", {}, {}, ChangeLabel{false, true, {}}},
               Post{"c", 2, "x", {}, {}, ChangeLabel{true, false, {}}}};
    CHECK(derive_transition(t) == Transition::switch_event);

    t.posts[2].gold_change = ChangeLabel{false, false, {}};
    CHECK(derive_transition(t) == Transition::escalation);

    // No change labels at all: escalation is the default framing.
    Timeline plain;
    plain.timeline_id = "p";
    plain.posts = {Post{"a", 0, "x", {}, {}, {}}};
    CHECK(derive_transition(plain) == Transition::escalation);
}

TEST_CASE("direction from third-vs-third well-being means") {
    auto make = [](std::vector<int> wb) {
        Timeline t;
        t.timeline_id = "t";
        for (std::size_t i = 0; i < wb.size(); ++i)
            t.posts.push_back(Post{"p" + std::to_string(i), static_cast<int>(i), "x",
                                   wb[i] > 0 ? std::optional<int>(wb[i]) : std::nullopt, {}, {}});
        return t;
    };
    CHECK(derive_direction(make({2, 3, 3, 3, 3, 8})) == Direction::improvement);
    CHECK(derive_direction(make({8, 3, 3, 3, 3, 2})) == Direction::deterioration);
    CHECK(derive_direction(make({3, 4, 3, 4, 3, 3})) == Direction::fluctuation);
    // Delta exactly at the threshold stays fluctuation (strict comparison).
    CHECK(derive_direction(make({3, 3, 3, 3})) == Direction::fluctuation);
    // Posts without scores are skipped; all-absent falls back to fluctuation.
    CHECK(derive_direction(make({0, 0, 0})) == Direction::fluctuation);
    CHECK(derive_direction(make({2, 0, 9})) == Direction::improvement);
    // k = ceil(m / 3) over present scores only: 4 scores -> k = 2.
    CHECK(derive_direction(make({1, 1, 5, 5})) == Direction::improvement);

    SummaryConfig wide;
    wide.direction_threshold = 10.0;
    CHECK(derive_direction(make({1, 1, 5, 5}), wide) == Direction::fluctuation);
}

TEST_CASE("summary_inputs collects gold subelement features by valence") {
    Timeline t;
    t.timeline_id = "t";
    Post p = annotated("a", 0, 2, 4);
    p.gold_annotation->labels = {{"affect", "maladaptive", "anxiety"},
                                 {"behavior", "adaptive", "self_care"}};
    t.posts = {p};
    auto in = summary_inputs(t);
    CHECK(in.maladaptive_total == 4);
    CHECK(in.adaptive_total == 2);
    CHECK(in.maladaptive_features == std::set<std::string>{"anxiety"});
    CHECK(in.adaptive_features == std::set<std::string>{"self_care"});
}

TEST_CASE("rendered template covers the dominance x transition x direction grid") {
    for (bool maladaptive_dominant : {true, false}) {
        for (auto tr : {Transition::switch_event, Transition::escalation}) {
            for (auto dir :
                 {Direction::deterioration, Direction::improvement, Direction::fluctuation}) {
                SummaryInputs in;
                in.maladaptive_total = maladaptive_dominant ? 10 : 2;
                in.adaptive_total = maladaptive_dominant ? 2 : 10;
                in.maladaptive_features = {"anxiety", "withdrawal"};
                in.adaptive_features = {"calm"};
                in.transition = tr;
                in.direction = dir;
                auto s = render_summary(in);

                CHECK(s.central_theme.find("central psychological theme") != std::string::npos);
                if (maladaptive_dominant) {
                    CHECK(s.initial_state.find("maladaptive self-state processes are more "
                                               "dominant") != std::string::npos);
                    CHECK(s.initial_state.find("anxiety, withdrawal") != std::string::npos);
                    CHECK(s.interaction_dynamics.find("Maladaptive dynamics intensify") !=
                          std::string::npos);
                } else {
                    CHECK(s.initial_state.find("adaptive self-state processes are more "
                                               "dominant") != std::string::npos);
                    CHECK(s.initial_state.find("calm") != std::string::npos);
                    CHECK(s.interaction_dynamics.find("Adaptive processes strengthen") !=
                          std::string::npos);
                }
                if (tr == Transition::switch_event)
                    CHECK(s.transition.find("A transition point emerges") != std::string::npos);
                else
                    CHECK(s.transition.find("An escalation unfolds") != std::string::npos);
                if (dir == Direction::deterioration)
                    CHECK(s.outcome.find("sustained distress and hopelessness") !=
                          std::string::npos);
                else if (dir == Direction::improvement)
                    CHECK(s.outcome.find("resilience and psychological recovery") !=
                          std::string::npos);
                else
                    CHECK(s.outcome.find("remain in tension") != std::string::npos);

                CHECK(s.text == s.central_theme + " " + s.initial_state + " " +
                                    s.interaction_dynamics + " " + s.transition + " " + s.outcome +
                                    " " + s.global_closers);
                CHECK(s.text.find("  ") == std::string::npos);  // single-space joins
            }
        }
    }
}

TEST_CASE("dominance tie renders maladaptive initial state with adaptive dynamics") {
    SummaryInputs in;
    in.maladaptive_total = 6;
    in.adaptive_total = 6;
    in.maladaptive_features = {"anxiety"};
    in.adaptive_features = {"calm"};
    auto s = render_summary(in);
    CHECK(s.initial_state.find("maladaptive self-state processes are more dominant") !=
          std::string::npos);
    CHECK(s.interaction_dynamics.find("Adaptive processes strengthen") != std::string::npos);
}

TEST_CASE("feature lists are sorted and capped") {
    SummaryInputs in;
    in.maladaptive_total = 9;
    in.adaptive_total = 1;
    in.maladaptive_features = {"g", "c", "a", "e", "b", "f", "d"};
    auto s = render_summary(in);
    CHECK(s.initial_state.find("a, b, c, d, e") != std::string::npos);
    CHECK(s.initial_state.find("a, b, c, d, e, f") == std::string::npos);

    SummaryConfig two;
    two.max_features = 2;
    auto s2 = render_summary(in, two);
    CHECK(s2.initial_state.find("a, b, c") == std::string::npos);
    CHECK(s2.initial_state.find("such as a, b,") != std::string::npos);
}

TEST_CASE("rendering is deterministic") {
    SummaryInputs in;
    in.maladaptive_total = 3;
    in.adaptive_total = 7;
    in.adaptive_features = {"calm", "hope"};
    in.transition = Transition::switch_event;
    in.direction = Direction::improvement;
    CHECK(render_summary(in).text == render_summary(in).text);
    auto j = render_summary(in).to_json();
    CHECK(j.at("text").get<std::string>() == render_summary(in).text);
}

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mindtrace.h"

using nlohmann::json;

namespace {

std::string data_path(const std::string& name) {
    return std::string(MINDTRACE_DATA_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

struct Ctx {
    mt_ctx* p;
    Ctx() : p(mt_ctx_new()) {}
    ~Ctx() { mt_ctx_free(p); }
    operator mt_ctx*() const { return p; }
};

json annotated_timelines() {
    json posts = json::array();
    const char* worried[] = {"I am so worried and my heart races all night",
                             "worried sick again, racing thoughts and panic",
                             "the panic and worry would not stop today",
                             "another worried night, panic creeping in"};
    const char* walks[] = {"went for a long walk and did some breathing",
                           "breathing exercises and a walk helped a lot",
                           "another calm walk, slow breathing all the way",
                           "walk plus breathing routine keeps me steady"};
    json tl = json::array();
    for (int t = 0; t < 2; ++t) {
        json jposts = json::array();
        for (int i = 0; i < 4; ++i) {
            json labels = json::array();
            labels.push_back({{"element", "affect"},
                              {"valence", "maladaptive"},
                              {"subelement", "anxiety"}});
            json jp{{"post_id", "t" + std::to_string(t) + "p" + std::to_string(i)},
                    {"position", i},
                    {"text", t == 0 ? worried[i] : walks[i]},
                    {"adaptive_presence", t == 0 ? 1 : 4},
                    {"maladaptive_presence", t == 0 ? 4 : 1}};
            if (t == 1)
                labels = json::array({{{"element", "behavior"},
                                       {"valence", "adaptive"},
                                       {"subelement", "self_care"}}});
            jp["labels"] = labels;
            if (i > 0) {
                jp["switch"] = false;
                jp["escalation"] = false;
            }
            jposts.push_back(jp);
        }
        tl.push_back({{"timeline_id", "tl" + std::to_string(t)}, {"posts", jposts}});
    }
    return json{{"timelines", tl}};
}

}  // namespace

TEST_CASE("version and context lifecycle") {
    CHECK(std::string(mt_version()) == "0.1.0");
    Ctx ctx;
    CHECK(std::string(mt_last_error(ctx)) == "");
    CHECK(mt_load_schema(ctx, data_path("schema_default.json").c_str()) == MT_OK);
}

TEST_CASE("error statuses and messages") {
    Ctx ctx;
    CHECK(mt_load_schema(ctx, "/nonexistent/schema.json") == MT_ERR_VALIDATION);
    CHECK(std::string(mt_last_error(ctx)).find("/nonexistent/schema.json") != std::string::npos);

    spill("capi_bad.json", "{ not json");
    CHECK(mt_load_schema(ctx, "capi_bad.json") == MT_ERR_PARSE);

    CHECK(mt_load_schema(ctx, data_path("schema_default.json").c_str()) == MT_OK);
    CHECK(std::string(mt_last_error(ctx)) == "");
    std::remove("capi_bad.json");
}

TEST_CASE("option setter validates keys and values") {
    Ctx ctx;
    CHECK(mt_set_option(ctx, "seed", "42") == MT_OK);
    CHECK(mt_set_option(ctx, "trees.n_trees", "16") == MT_OK);
    CHECK(mt_set_option(ctx, "no.such.key", "1") == MT_ERR_VALIDATION);
    CHECK(mt_set_option(ctx, "trees.n_trees", "many") == MT_ERR_VALIDATION);
    CHECK(mt_set_option(ctx, "jobs", "0") == MT_ERR_VALIDATION);
    CHECK(mt_set_option(ctx, "summary.aggregate_mean", "yes") == MT_ERR_VALIDATION);
    CHECK(mt_set_option(ctx, "summary.aggregate_mean", "true") == MT_OK);
}

TEST_CASE("backend config rejects malformed json") {
    Ctx ctx;
    CHECK(mt_set_backend_json(ctx, "{\"endpoint_url\": \"http://127.0.0.1:1/x\"}") == MT_OK);
    CHECK(mt_set_backend_json(ctx, "{oops") == MT_ERR_PARSE);
    CHECK(mt_set_backend_json(ctx, "") == MT_OK);
}

TEST_CASE("scalar helpers") {
    Ctx ctx;
    double v = 0;
    CHECK(mt_pos_weight(ctx, 80, 20, 20, &v) == MT_OK);
    CHECK(v == doctest::Approx(4.0));
    CHECK(mt_pos_weight(ctx, 100, 1, 20, &v) == MT_OK);
    CHECK(v == doctest::Approx(20.0));
    CHECK(mt_pos_weight(ctx, 10, 0, 20, &v) != MT_OK);

    CHECK(mt_llr_score(ctx, 20, 40, 10, 20, &v) == MT_OK);
    CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

    CHECK(mt_rouge_l_recall(ctx, "a b c", "a b c", &v) == MT_OK);
    CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("signature extraction and tagging, byte-determinism, meta block") {
    Ctx ctx;
    REQUIRE(mt_load_schema(ctx, data_path("schema_default.json").c_str()) == MT_OK);
    REQUIRE(mt_load_stopwords(ctx, data_path("stopwords.txt").c_str()) == MT_OK);
    spill("capi_tl.json", annotated_timelines().dump());

    REQUIRE(mt_extract_signatures(ctx, "capi_tl.json", "capi_sigs.json") == MT_OK);
    const json sigs = json::parse(slurp("capi_sigs.json"));
    CHECK(sigs.contains("meta"));
    CHECK(sigs.at("meta").at("tool_version") == "0.1.0");
    CHECK(sigs.at("meta").at("seed") == 0);
    CHECK(sigs.at("meta").at("config_hash").is_string());

    REQUIRE(mt_tag(ctx, "capi_sigs.json", "capi_tl.json", "capi_preds1.json") == MT_OK);
    REQUIRE(mt_tag(ctx, "capi_sigs.json", "capi_tl.json", "capi_preds2.json") == MT_OK);
    CHECK(slurp("capi_preds1.json") == slurp("capi_preds2.json"));

    const json preds = json::parse(slurp("capi_preds1.json"));
    REQUIRE(preds.at("predictions").size() == 8);
    // The anxious timeline should pick up the maladaptive affect label.
    bool found = false;
    for (const auto& l : preds.at("predictions").at(1).at("labels"))
        if (l.at("subelement") == "anxiety") found = true;
    CHECK(found);

    // Missing signature file maps to validation and names the path.
    CHECK(mt_tag(ctx, "capi_missing_sigs.json", "capi_tl.json", "capi_out.json") ==
          MT_ERR_VALIDATION);
    CHECK(std::string(mt_last_error(ctx)).find("capi_missing_sigs.json") != std::string::npos);

    for (const char* f : {"capi_tl.json", "capi_sigs.json", "capi_preds1.json",
                          "capi_preds2.json"})
        std::remove(f);
}

TEST_CASE("presence train and score round trip") {
    Ctx ctx;
    REQUIRE(mt_load_schema(ctx, data_path("schema_default.json").c_str()) == MT_OK);
    REQUIRE(mt_set_option(ctx, "seed", "7") == MT_OK);
    spill("capi_tl2.json", annotated_timelines().dump());

    REQUIRE(mt_train_presence(ctx, "capi_tl2.json", "capi_presence.json") == MT_OK);
    const json model = json::parse(slurp("capi_presence.json"));
    CHECK(model.at("format") == "mindtrace-presence");

    REQUIRE(mt_score_presence(ctx, "capi_presence.json", "capi_tl2.json",
                              "capi_scored.json") == MT_OK);
    const json scored = json::parse(slurp("capi_scored.json"));
    for (const auto& r : scored.at("predictions")) {
        const int a = r.at("adaptive_presence").get<int>();
        const int m = r.at("maladaptive_presence").get<int>();
        CHECK(a >= 1);
        CHECK(a <= 5);
        CHECK(m >= 1);
        CHECK(m <= 5);
    }
    for (const char* f : {"capi_tl2.json", "capi_presence.json", "capi_scored.json"})
        std::remove(f);
}

TEST_CASE("leaderboard evaluation over the fixture csvs") {
    Ctx ctx;
    REQUIRE(mt_evaluate_rankings(ctx, data_path("fixtures/task1_rankings.csv").c_str(),
                                 data_path("fixtures/task31_rankings.csv").c_str(),
                                 "capi_rank.json") == MT_OK);
    const json rep = json::parse(slurp("capi_rank.json"));
    CHECK(rep.at("task1_correlation").at("r").get<double>() ==
          doctest::Approx(-0.486).epsilon(0.05));
    bool found = false;
    for (const auto& s : rep.at("task31_rankings"))
        if (s.at("team") == "DreamerNLplus") {
            found = true;
            CHECK(s.at("final_rank") == 2);
        }
    CHECK(found);
    std::remove("capi_rank.json");
}

TEST_CASE("kfold split writes fold lists") {
    Ctx ctx;
    spill("capi_tl3.json", annotated_timelines().dump());
    REQUIRE(mt_kfold(ctx, "capi_tl3.json", 2, "capi_folds.json") == MT_OK);
    const json folds = json::parse(slurp("capi_folds.json"));
    CHECK(folds.at("k") == 2);
    CHECK(folds.at("folds").size() == 2);
    std::remove("capi_tl3.json");
    std::remove("capi_folds.json");
}

TEST_CASE("config hash tracks option changes") {
    Ctx ctx;
    spill("capi_tl4.json", annotated_timelines().dump());
    REQUIRE(mt_kfold(ctx, "capi_tl4.json", 2, "capi_f1.json") == MT_OK);
    REQUIRE(mt_set_option(ctx, "tagger.k", "9") == MT_OK);
    REQUIRE(mt_kfold(ctx, "capi_tl4.json", 2, "capi_f2.json") == MT_OK);
    const json a = json::parse(slurp("capi_f1.json"));
    const json b = json::parse(slurp("capi_f2.json"));
    CHECK(a.at("meta").at("config_hash") != b.at("meta").at("config_hash"));
    for (const char* f : {"capi_tl4.json", "capi_f1.json", "capi_f2.json"}) std::remove(f);
}

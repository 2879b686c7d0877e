#include <doctest.h>

#include <atomic>
#include <functional>
#include <thread>

#include <httplib.h>

#include "mindtrace/llm.hpp"

using namespace mindtrace;
using nlohmann::json;

namespace {

// Minimal in-process chat-completion endpoint. The reply function receives
// the prompt and the 1-based call number.
class MockServer {
public:
    explicit MockServer(std::function<std::string(const std::string&, int)> reply)
        : reply_(std::move(reply)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
            const json body = json::parse(req.body);
            last_body_ = body;
            const std::string prompt = body.at("messages").at(0).at("content").get<std::string>();
            const int n = ++calls_;
            const std::string text = reply_(prompt, n);
            res.set_content(
                json{{"choices", json::array({json{{"message", json{{"role", "assistant"},
                                                                    {"content", text}}}}})}}
                    .dump(),
                "application/json");
        });
        server_.Post("/error", [](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
            res.set_content("boom", "text/plain");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockServer() {
        server_.stop();
        thread_.join();
    }

    int port() const { return port_; }
    int calls() const { return calls_; }
    std::string url(const std::string& path = "/v1/chat/completions") const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }
    BackendConfig config() const {
        BackendConfig c;
        c.endpoint_url = url();
        c.model_name = "mock-model";
        return c;
    }
    json last_body() const { return last_body_; }

private:
    std::function<std::string(const std::string&, int)> reply_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> calls_{0};
    json last_body_;
};

FewShotBank test_bank() {
    const json example{{"context", json::array({"earlier post"})},
                       {"current", "current post"},
                       {"response",
                        {{"switch", true}, {"escalation", false}, {"justification", "because"}}}};
    json first = example;
    first["context"] = json::array();
    return FewShotBank::from_json(json{{"switch_only", example},
                                       {"escalation_only", example},
                                       {"both", example},
                                       {"neither", example},
                                       {"first_post", first}});
}

Timeline three_posts() {
    Timeline t;
    t.timeline_id = "t";
    t.posts = {{"p0", 0, "first", {}, {}, {}},
               {"p1", 1, "second", {}, {}, {}},
               {"p2", 2, "third", {}, {}, {}}};
    return t;
}

const std::string kGood =
    R"({"switch": true, "escalation": false, "justification": "clear shift"})";

}  // namespace

TEST_CASE("backend config json round-trip, unknown keys, env override") {
    auto c = BackendConfig::from_json(json{{"endpoint_url", "http://h:1/v1"},
                                           {"model_name", "m"},
                                           {"temperature", 0.5},
                                           {"max_retries", 2}});
    CHECK(c.endpoint_url == "http://h:1/v1");
    CHECK(c.max_retries == 2);
    CHECK(c.timeout_sec == 120);  // default preserved
    CHECK(BackendConfig::from_json(c.to_json()).to_json() == c.to_json());

    CHECK_THROWS_AS(BackendConfig::from_json(json{{"nope", 1}}), ValidationError);
    CHECK_THROWS_AS(BackendConfig::from_json(json{{"max_retries", -1}}), ValidationError);

    setenv("MINDTRACE_LLM_URL", "http://env:9/x", 1);
    setenv("MINDTRACE_LLM_MODEL", "env-model", 1);
    c.apply_env();
    CHECK(c.endpoint_url == "http://env:9/x");
    CHECK(c.model_name == "env-model");
    unsetenv("MINDTRACE_LLM_URL");
    unsetenv("MINDTRACE_LLM_MODEL");
}

TEST_CASE("change prompt renders examples, window and format instruction") {
    auto bank = test_bank();
    auto t = three_posts();
    auto window = context_window(t, 2, 5);
    auto prompt = build_change_prompt(window, t.posts[2], bank);
    CHECK(prompt.find("Switch only") != std::string::npos);
    CHECK(prompt.find("First post (no preceding context)") != std::string::npos);
    CHECK(prompt.find("Previous post 1: first") != std::string::npos);
    CHECK(prompt.find("Previous post 2: second") != std::string::npos);
    CHECK(prompt.find("Current post: third") != std::string::npos);
    CHECK(prompt.find("exactly one JSON object") != std::string::npos);

    auto first = build_change_prompt({}, t.posts[0], bank);
    CHECK(first.find("no preceding context") != std::string::npos);
}

TEST_CASE("augmentation and summary prompts") {
    std::vector<std::string> evidence = {"example one", "example two"};
    auto p = build_augmentation_prompt({"affect", "maladaptive", "anxiety"},
                                       "fear responses out of proportion", evidence, 3);
    CHECK(p.find("element=affect") != std::string::npos);
    CHECK(p.find("example two") != std::string::npos);
    CHECK(p.find("3 new") != std::string::npos);
    CHECK_THROWS_AS(build_augmentation_prompt({"a", "adaptive", "s"}, "", evidence, 1),
                    ValidationError);
    std::vector<std::string> none;
    CHECK_THROWS_AS(build_augmentation_prompt({"a", "adaptive", "s"}, "def", none, 1),
                    ValidationError);

    Timeline t = three_posts();
    t.posts[1].wellbeing = 4;
    t.posts[2].gold_change = ChangeLabel{true, false, {}};
    t.posts[1].gold_annotation = PostAnnotation{};
    t.posts[1].gold_annotation->labels.insert({"affect", "maladaptive", "anxiety"});
    std::vector<std::string> examples = {"an example summary"};
    auto s = build_summary_prompt(t, examples);
    CHECK(s.find("an example summary") != std::string::npos);
    CHECK(s.find("[well-being 4]") != std::string::npos);
    CHECK(s.find("[switch]") != std::string::npos);
    CHECK(s.find("anxiety") == std::string::npos);  // gold labels never leak
}

TEST_CASE("extract_first_json handles prose, nesting and braces in strings") {
    CHECK(extract_first_json(R"(Sure! {"a": 1} hope that helps)") == json{{"a", 1}});
    CHECK(extract_first_json(R"({"outer": {"inner": 2}})") == json{{"outer", {{"inner", 2}}}});
    CHECK(extract_first_json(R"({"s": "curly } brace {"})") == json{{"s", "curly } brace {"}});
    CHECK(extract_first_json("junk {not json} {\"b\": 2}") == json{{"b", 2}});
    CHECK_THROWS_AS(extract_first_json("no object here"), ValidationError);
    CHECK_THROWS_AS(extract_first_json("{truncated"), ValidationError);
}

TEST_CASE("parse_validated retries then throws with all attempts") {
    static const FieldSpec schema[] = {{"switch", json::value_t::boolean},
                                       {"escalation", json::value_t::boolean},
                                       {"justification", json::value_t::string}};
    int retries = 0;
    auto good_on_second = [&] {
        ++retries;
        return kGood;
    };
    auto j = parse_validated("not json", schema, good_on_second, 3);
    CHECK(retries == 1);
    CHECK(j.at("switch") == true);

    // Wrong type counts as malformed.
    retries = 0;
    auto j2 = parse_validated(R"({"switch": "yes", "escalation": false, "justification": "x"})",
                              schema, good_on_second, 3);
    CHECK(retries == 1);
    CHECK(j2.at("justification") == "clear shift");

    // Exhaustion keeps every raw attempt.
    auto always_bad = [] { return std::string("still bad"); };
    try {
        parse_validated("bad0", schema, always_bad, 2);
        FAIL("expected ValidationExhaustedError");
    } catch (const ValidationExhaustedError& e) {
        REQUIRE(e.attempts.size() == 3);  // initial + 2 retries
        CHECK(e.attempts[0] == "bad0");
        CHECK(e.attempts[1] == "still bad");
    }

    // max_retries = 0: no retry call at all.
    int calls = 0;
    auto counting = [&] {
        ++calls;
        return kGood;
    };
    CHECK_THROWS_AS(parse_validated("bad", schema, counting, 0), ValidationExhaustedError);
    CHECK(calls == 0);
}

TEST_CASE("client round trip posts an openai-style body") {
    MockServer server([](const std::string& prompt, int) {
        CHECK(prompt.find("hello backend") != std::string::npos);
        return "reply text";
    });
    LlmClient client(server.config());
    CHECK(client.complete("hello backend") == "reply text");
    const json body = server.last_body();
    CHECK(body.at("model") == "mock-model");
    CHECK(body.at("temperature") == 0.0);
    CHECK(body.at("stream") == false);
    CHECK(body.at("messages").at(0).at("role") == "user");
}

TEST_CASE("client maps http failures to typed errors") {
    MockServer server([](const std::string&, int) { return "x"; });
    BackendConfig bad = server.config();
    bad.endpoint_url = server.url("/error");
    try {
        LlmClient(bad).complete("p");
        FAIL("expected EndpointError");
    } catch (const EndpointError& e) {
        CHECK(e.status == 500);
    }

    BackendConfig gone = server.config();
    gone.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";  // nothing listens there
    CHECK_THROWS_AS(LlmClient(gone).complete("p"), TransportError);

    BackendConfig no_scheme = server.config();
    no_scheme.endpoint_url = "localhost/v1";
    CHECK_THROWS_AS(LlmClient(no_scheme).complete("p"), ValidationError);
}

TEST_CASE("response_path navigates alternative layouts") {
    httplib::Server alt;
    alt.Post("/gen", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"response", "alt text"}}.dump(), "application/json");
    });
    const int port = alt.bind_to_any_port("127.0.0.1");
    std::thread th([&] { alt.listen_after_bind(); });
    alt.wait_until_ready();

    BackendConfig c;
    c.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/gen";
    c.response_path = "response";
    CHECK(LlmClient(c).complete("p") == "alt text");

    c.response_path = "missing.field";
    CHECK_THROWS_AS(LlmClient(c).complete("p"), ValidationError);
    alt.stop();
    th.join();
}

TEST_CASE("detect_changes_llm forces the first post and calls once per other post") {
    MockServer server([](const std::string&, int) { return kGood; });
    auto preds = detect_changes_llm(three_posts(), test_bank(), LlmClient(server.config()));
    REQUIRE(preds.size() == 3);
    CHECK(!preds[0].switch_flag);
    CHECK(!preds[0].escalation);
    CHECK(preds[0].retries == 0);
    CHECK(preds[1].switch_flag);
    CHECK(preds[2].switch_flag);
    CHECK(server.calls() == 2);  // nothing for post 0
}

TEST_CASE("detect_changes_llm retries malformed output with a format reminder") {
    MockServer server([](const std::string& prompt, int n) {
        if (n == 1) return std::string("I think it is a switch.");
        if (n == 2) CHECK(prompt.find("Reminder:") != std::string::npos);
        return kGood;
    });
    auto preds = detect_changes_llm(three_posts(), test_bank(), LlmClient(server.config()));
    CHECK(server.calls() == 3);  // post 1 took two calls, post 2 one
    CHECK(preds[1].retries == 1);
    CHECK(preds[2].retries == 0);
}

TEST_CASE("detect_changes_llm surfaces exhaustion with the post position") {
    MockServer server([](const std::string&, int) { return std::string("never json"); });
    BackendConfig cfg = server.config();
    cfg.max_retries = 2;
    try {
        detect_changes_llm(three_posts(), test_bank(), LlmClient(cfg));
        FAIL("expected ValidationExhaustedError");
    } catch (const ValidationExhaustedError& e) {
        CHECK(std::string(e.what()).find("post 1 (p1)") != std::string::npos);
        CHECK(e.attempts.size() == 3);
    }
    CHECK(server.calls() == 3);  // post 1 exhausted; post 2 never reached
}

TEST_CASE("detect_changes_llm preserves transport error types") {
    BackendConfig cfg;
    cfg.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
    try {
        detect_changes_llm(three_posts(), test_bank(), LlmClient(cfg));
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(std::string(e.what()).find("post 1 (p1)") != std::string::npos);
    }
}

TEST_CASE("few-shot bank loads from the data directory") {
    auto bank = FewShotBank::load(std::string(MINDTRACE_DATA_DIR) + "/fewshot_change.json");
    CHECK(bank.switch_only.response.switch_flag);
    CHECK(!bank.switch_only.response.escalation);
    CHECK(!bank.neither.response.switch_flag);
    CHECK(bank.both.response.escalation);
    CHECK(bank.first_post.context.empty());
}

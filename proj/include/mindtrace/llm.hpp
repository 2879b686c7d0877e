#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindtrace/core.hpp"

namespace mindtrace {

struct BackendConfig {
    std::string endpoint_url = "http://localhost:11434/v1/chat/completions";
    std::string model_name = "llama3.1:8b";
    double temperature = 0.0;
    int max_retries = 3;
    int timeout_sec = 120;
    int max_in_flight = 4;
    // Dot path to the assistant text in the endpoint's response JSON.
    std::string response_path = "choices.0.message.content";

    static BackendConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    // MINDTRACE_LLM_URL / MINDTRACE_LLM_MODEL override file values.
    void apply_env();
};

struct ChangeResponse {
    bool switch_flag = false;
    bool escalation = false;
    std::string justification;
};

struct FewShotExample {
    std::vector<std::string> context;
    std::string current;
    ChangeResponse response;
};

// The five fixed example slots: Switch-only, Escalation-only, both, neither,
// first-post.
struct FewShotBank {
    FewShotExample switch_only;
    FewShotExample escalation_only;
    FewShotExample both;
    FewShotExample neither;
    FewShotExample first_post;

    static FewShotBank from_json(const nlohmann::json& j);
    static FewShotBank load(const std::string& path);
};

std::string build_change_prompt(std::span<const Post> window, const Post& current,
                                const FewShotBank& bank);

std::string build_augmentation_prompt(const LabelTriple& label, const std::string& definition,
                                      std::span<const std::string> evidence, int n_new);

// Task 3.1 few-shot prompt. Renders post text, change markers and well-being
// only; gold ABCD annotations are never injected.
std::string build_summary_prompt(const Timeline& sequence,
                                 std::span<const std::string> examples);

// One chat completion round trip. Throws TransportError / TimeoutError /
// EndpointError; performs no retries itself.
class LlmClient {
public:
    explicit LlmClient(BackendConfig config) : config_(std::move(config)) {}
    const BackendConfig& config() const { return config_; }

    std::string complete(const std::string& prompt) const;

private:
    BackendConfig config_;
};

// First balanced {...} object embedded in raw text; throws ValidationError
// when none parses.
nlohmann::json extract_first_json(const std::string& raw);

// Field name and required JSON type.
struct FieldSpec {
    std::string name;
    nlohmann::json::value_t type;
};

// Validates raw against the schema; on mismatch calls retry_fn for a fresh
// raw response, up to max_retries times. Throws ValidationExhaustedError
// carrying every raw attempt.
nlohmann::json parse_validated(const std::string& raw, std::span<const FieldSpec> schema,
                               const std::function<std::string()>& retry_fn, int max_retries);

ChangeResponse parse_change_response(const nlohmann::json& j);

struct ChangePrediction {
    bool switch_flag = false;
    bool escalation = false;
    std::string justification;
    int retries = 0;  // format retries consumed for this post
};

// Post 0 is forced (false, false) with no endpoint call; every other post
// gets one validated response. Transport/validation errors carry the post
// index.
std::vector<ChangePrediction> detect_changes_llm(const Timeline& timeline,
                                                 const FewShotBank& bank,
                                                 const LlmClient& client);

// One-line reminder appended to a prompt when re-asking after a malformed
// response.
std::string format_reminder();

}  // namespace mindtrace

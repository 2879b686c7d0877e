#include "mindtrace/llm.hpp"

#include <cstdlib>
#include <sstream>

#include <httplib.h>

namespace mindtrace {

using nlohmann::json;

BackendConfig BackendConfig::from_json(const json& j) {
    BackendConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "endpoint_url") c.endpoint_url = value.get<std::string>();
        else if (key == "model_name") c.model_name = value.get<std::string>();
        else if (key == "temperature") c.temperature = value.get<double>();
        else if (key == "max_retries") c.max_retries = value.get<int>();
        else if (key == "timeout_sec") c.timeout_sec = value.get<int>();
        else if (key == "max_in_flight") c.max_in_flight = value.get<int>();
        else if (key == "response_path") c.response_path = value.get<std::string>();
        else throw ValidationError("unknown backend config key: " + key);
    }
    if (c.max_retries < 0) throw ValidationError("max_retries must be >= 0");
    if (c.temperature < 0) throw ValidationError("temperature must be >= 0");
    if (c.max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
    return c;
}

json BackendConfig::to_json() const {
    return json{{"endpoint_url", endpoint_url}, {"model_name", model_name},
                {"temperature", temperature},  {"max_retries", max_retries},
                {"timeout_sec", timeout_sec},  {"max_in_flight", max_in_flight},
                {"response_path", response_path}};
}

void BackendConfig::apply_env() {
    if (const char* url = std::getenv("MINDTRACE_LLM_URL")) endpoint_url = url;
    if (const char* model = std::getenv("MINDTRACE_LLM_MODEL")) model_name = model;
}

namespace {

FewShotExample example_from_json(const json& j) {
    FewShotExample e;
    e.context = j.at("context").get<std::vector<std::string>>();
    e.current = j.at("current").get<std::string>();
    const auto& r = j.at("response");
    e.response.switch_flag = r.at("switch").get<bool>();
    e.response.escalation = r.at("escalation").get<bool>();
    e.response.justification = r.at("justification").get<std::string>();
    return e;
}

void render_example(std::ostringstream& out, const char* title, const FewShotExample& e) {
    out << "### Example: " << title << "\n";
    if (e.context.empty()) {
        out << "(no preceding posts)\n";
    } else {
        for (std::size_t i = 0; i < e.context.size(); ++i)
            out << "Previous post " << i + 1 << ": " << e.context[i] << "\n";
    }
    out << "Current post: " << e.current << "\n";
    out << "Answer: "
        << json{{"switch", e.response.switch_flag},
                {"escalation", e.response.escalation},
                {"justification", e.response.justification}}
               .dump()
        << "\n\n";
}

}  // namespace

FewShotBank FewShotBank::from_json(const json& j) {
    FewShotBank b;
    b.switch_only = example_from_json(j.at("switch_only"));
    b.escalation_only = example_from_json(j.at("escalation_only"));
    b.both = example_from_json(j.at("both"));
    b.neither = example_from_json(j.at("neither"));
    b.first_post = example_from_json(j.at("first_post"));
    return b;
}

FewShotBank FewShotBank::load(const std::string& path) {
    try {
        return from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        throw ParseError("few-shot bank: " + std::string(e.what()), e.byte);
    }
}

std::string build_change_prompt(std::span<const Post> window, const Post& current,
                                const FewShotBank& bank) {
    std::ostringstream out;
    out << "You are analyzing a social media timeline for moments of psychological change.\n"
        << "Definitions:\n"
        << "- Switch: a sudden qualitative change between self-states across consecutive "
           "posts.\n"
        << "- Escalation: a gradual intensification of a state across posts.\n\n"
        << "Decide whether the current post marks a Switch and/or an Escalation relative to "
           "the preceding posts.\n\n";
    render_example(out, "Switch only", bank.switch_only);
    render_example(out, "Escalation only", bank.escalation_only);
    render_example(out, "Both", bank.both);
    render_example(out, "Neither", bank.neither);
    render_example(out, "First post (no preceding context)", bank.first_post);

    out << "### Now classify this post\n";
    if (window.empty()) {
        out << "This is the first post of the timeline; there is no preceding context.\n";
    } else {
        for (std::size_t i = 0; i < window.size(); ++i)
            out << "Previous post " << i + 1 << ": " << window[i].text << "\n";
    }
    out << "Current post: " << current.text << "\n\n"
        << "Respond with exactly one JSON object of the form "
           "{\"switch\": bool, \"escalation\": bool, \"justification\": string} "
           "and nothing else.\n";
    return out.str();
}

std::string build_augmentation_prompt(const LabelTriple& label, const std::string& definition,
                                      std::span<const std::string> evidence, int n_new) {
    if (definition.empty()) throw ValidationError("augmentation prompt requires a definition");
    if (evidence.empty()) throw ValidationError("augmentation prompt requires evidence");
    std::ostringstream out;
    out << "You are generating synthetic training evidence for a psychological "
           "self-state annotation scheme.\n\n"
        << "Label: element=" << label.element << ", valence=" << label.valence
        << ", subelement=" << label.subelement << "\n"
        << "Definition: " << definition << "\n\n"
        << "Annotated evidence examples:\n";
    for (std::size_t i = 0; i < evidence.size(); ++i)
        out << i + 1 << ". " << evidence[i] << "\n";
    out << "\nWrite " << n_new << " new, distinct evidence examples that express the same "
        << "label. Keep the register of anonymous social media posts. Return them as a JSON "
        << "object {\"examples\": [string, ...]}.\n";
    return out.str();
}

std::string build_summary_prompt(const Timeline& sequence,
                                 std::span<const std::string> examples) {
    if (sequence.posts.empty()) throw ValidationError("summary prompt requires posts");
    std::ostringstream out;
    out << "You are summarizing a sequence of social media posts surrounding a "
           "psychological change event, using the MIND self-state framework.\n"
        << "ABCD abbreviations: A=affect, B=behavior, C=cognition, D=desire; each element "
           "carries an adaptive or maladaptive valence.\n"
        << "Relational dynamics vocabulary: dominance, suppression, reinforcement, conflict, "
           "alternation between self-states.\n\n"
        << "Required summary structure:\n"
        << "1. Pre-change phase: the self-state configuration before the change.\n"
        << "2. Within-state and between-state dynamics: how states reinforce or suppress "
           "each other over time.\n"
        << "3. Explicit change event identification: name the switch or escalation and "
           "where in the sequence it occurs.\n"
        << "Infer ABCD dynamics from the post text itself.\n\n";
    for (std::size_t i = 0; i < examples.size(); ++i)
        out << "### Example summary " << i + 1 << "\n" << examples[i] << "\n\n";
    out << "### Sequence\n";
    for (const auto& p : sequence.posts) {
        out << "Post " << p.position;
        if (p.wellbeing) out << " [well-being " << *p.wellbeing << "]";
        if (p.gold_change && p.gold_change->switch_flag) out << " [switch]";
        if (p.gold_change && p.gold_change->escalation) out << " [escalation]";
        out << ": " << p.text << "\n";
    }
    out << "\nWrite the summary now.\n";
    return out.str();
}

namespace {

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ValidationError("endpoint_url must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

json navigate_path(const json& j, const std::string& path) {
    const json* cur = &j;
    std::istringstream in(path);
    std::string part;
    while (std::getline(in, part, '.')) {
        if (cur->is_array()) {
            const std::size_t idx = std::stoul(part);
            if (idx >= cur->size())
                throw ValidationError("response path index out of range: " + part);
            cur = &(*cur)[idx];
        } else if (cur->is_object() && cur->contains(part)) {
            cur = &cur->at(part);
        } else {
            throw ValidationError("response missing path segment: " + part);
        }
    }
    return *cur;
}

}  // namespace

std::string LlmClient::complete(const std::string& prompt) const {
    const ParsedUrl url = split_url(config_.endpoint_url);
    httplib::Client client(url.base);
    client.set_connection_timeout(config_.timeout_sec, 0);
    client.set_read_timeout(config_.timeout_sec, 0);
    client.set_write_timeout(config_.timeout_sec, 0);

    const json body{{"model", config_.model_name},
                    {"messages",
                     json::array({json{{"role", "user"}, {"content", prompt}}})},
                    {"temperature", config_.temperature},
                    {"stream", false}};

    auto res = client.Post(url.path, body.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        const std::string msg = "endpoint " + config_.endpoint_url + ": " + httplib::to_string(err);
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write)
            throw TimeoutError(msg);
        throw TransportError(msg);
    }
    if (res->status < 200 || res->status >= 300)
        throw EndpointError("endpoint returned status " + std::to_string(res->status), res->status);

    json parsed;
    try {
        parsed = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw ValidationError("endpoint response is not JSON: " + std::string(e.what()));
    }
    const json content = navigate_path(parsed, config_.response_path);
    if (!content.is_string()) throw ValidationError("response content is not a string");
    return content.get<std::string>();
}

json extract_first_json(const std::string& raw) {
    for (std::size_t start = raw.find('{'); start != std::string::npos;
         start = raw.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false, escape = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (escape) {
                escape = false;
            } else if (in_string) {
                if (c == '\\') escape = true;
                else if (c == '"') in_string = false;
            } else if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    try {
                        return json::parse(raw.substr(start, i - start + 1));
                    } catch (const json::parse_error&) {
                        break;  // try the next '{'
                    }
                }
            }
        }
    }
    throw ValidationError("no JSON object found in response");
}

json parse_validated(const std::string& raw, std::span<const FieldSpec> schema,
                     const std::function<std::string()>& retry_fn, int max_retries) {
    if (max_retries < 0) throw RangeError("max_retries must be >= 0");
    std::vector<std::string> attempts;
    std::string current = raw;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        attempts.push_back(current);
        try {
            json j = extract_first_json(current);
            for (const auto& field : schema) {
                if (!j.contains(field.name))
                    throw ValidationError("missing field: " + field.name);
                const auto t = j.at(field.name).type();
                const bool ok =
                    t == field.type ||
                    (field.type == json::value_t::number_float &&
                     (t == json::value_t::number_integer || t == json::value_t::number_unsigned));
                if (!ok) throw ValidationError("wrong type for field: " + field.name);
            }
            return j;
        } catch (const ValidationError&) {
            if (attempt == max_retries) break;
            current = retry_fn();
        }
    }
    throw ValidationExhaustedError("structured response still malformed after " +
                                       std::to_string(max_retries) + " retries",
                                   std::move(attempts));
}

ChangeResponse parse_change_response(const json& j) {
    return {j.at("switch").get<bool>(), j.at("escalation").get<bool>(),
            j.at("justification").get<std::string>()};
}

std::string format_reminder() {
    return "Reminder: respond with exactly one JSON object "
           "{\"switch\": bool, \"escalation\": bool, \"justification\": string} and nothing "
           "else.";
}

std::vector<ChangePrediction> detect_changes_llm(const Timeline& timeline,
                                                 const FewShotBank& bank,
                                                 const LlmClient& client) {
    static const FieldSpec kSchema[] = {{"switch", json::value_t::boolean},
                                        {"escalation", json::value_t::boolean},
                                        {"justification", json::value_t::string}};
    std::vector<ChangePrediction> out;
    out.reserve(timeline.posts.size());
    for (std::size_t i = 0; i < timeline.posts.size(); ++i) {
        if (i == 0) {
            out.push_back({false, false, "first post: no change possible", 0});
            continue;
        }
        const auto window = context_window(timeline, static_cast<int>(i), 5);
        const std::string prompt = build_change_prompt(window, timeline.posts[i], bank);
        int retries = 0;
        const std::string where =
            "post " + std::to_string(i) + " (" + timeline.posts[i].post_id + "): ";
        try {
            const std::string raw = client.complete(prompt);
            const json j = parse_validated(
                raw, kSchema,
                [&] {
                    ++retries;
                    return client.complete(prompt + "\n" + format_reminder());
                },
                client.config().max_retries);
            const ChangeResponse r = parse_change_response(j);
            out.push_back({r.switch_flag, r.escalation, r.justification, retries});
        } catch (const ValidationExhaustedError& e) {
            throw ValidationExhaustedError(where + e.what(), e.attempts);
        } catch (const EndpointError& e) {
            throw EndpointError(where + e.what(), e.status);
        } catch (const TimeoutError& e) {
            throw TimeoutError(where + e.what());
        } catch (const TransportError& e) {
            throw TransportError(where + e.what());
        }
    }
    return out;
}

}  // namespace mindtrace

#include "mindtrace/core.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mindtrace {

using nlohmann::json;

LabelSchema LabelSchema::from_json(const json& j) {
    if (!j.is_object() || !j.contains("elements") || !j.contains("subelements"))
        throw ValidationError("label schema must be an object with 'elements' and 'subelements'");
    LabelSchema s;
    for (const auto& e : j.at("elements")) {
        std::string name = e.get<std::string>();
        if (s.subelements_.count(name))
            throw ValidationError("duplicate element in schema: " + name);
        s.elements_.push_back(name);
        s.subelements_[name] = {};
    }
    for (const auto& [element, subs] : j.at("subelements").items()) {
        auto it = s.subelements_.find(element);
        if (it == s.subelements_.end())
            throw ValidationError("subelements listed for unknown element: " + element);
        for (const auto& sub : subs) it->second.push_back(sub.get<std::string>());
    }
    // Each subelement belongs to exactly one element.
    std::map<std::string, std::string> owner;
    for (const auto& el : s.elements_) {
        for (const auto& sub : s.subelements_[el]) {
            auto [it, inserted] = owner.emplace(sub, el);
            if (!inserted && it->second != el)
                throw ValidationError("subelement '" + sub + "' appears under both '" +
                                      it->second + "' and '" + el + "'");
        }
    }
    std::size_t idx = 0;
    for (const auto& el : s.elements_) {
        for (const auto& sub : s.subelements_[el]) {
            s.index_[{el, kValenceAdaptive, sub}] = idx++;
            s.index_[{el, kValenceMaladaptive, sub}] = idx++;
            ++s.total_subelements_;
        }
    }
    return s;
}

LabelSchema LabelSchema::load(const std::string& path) {
    try {
        return from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        throw ParseError("label schema " + path + ": " + e.what(), e.byte);
    }
}

const std::vector<std::string>& LabelSchema::subelements(const std::string& element) const {
    auto it = subelements_.find(element);
    if (it == subelements_.end())
        throw ValidationError("unknown element: " + element);
    return it->second;
}

bool LabelSchema::contains(const LabelTriple& t) const { return index_.count(t) > 0; }

std::size_t LabelSchema::index_of(const LabelTriple& t) const {
    auto it = index_.find(t);
    if (it == index_.end())
        throw ValidationError("label not in schema: " + t.element + "/" + t.valence + "/" +
                              t.subelement);
    return it->second;
}

std::vector<LabelTriple> LabelSchema::enumerate() const {
    std::vector<LabelTriple> out(index_.size());
    for (const auto& [triple, idx] : index_) out[idx] = triple;
    return out;
}

namespace {

int presence_in_range(const json& j, const char* field, const std::string& post_id) {
    int v = j.at(field).get<int>();
    if (v < 1 || v > 5)
        throw ValidationError(std::string(field) + " out of range [1,5] (got " +
                              std::to_string(v) + ") in post '" + post_id + "'");
    return v;
}

Post post_from_json(const json& jp, int array_index, const LabelSchema* schema) {
    Post p;
    p.post_id = jp.at("post_id").get<std::string>();
    p.text = jp.at("text").get<std::string>();
    if (jp.contains("position")) {
        p.position = jp.at("position").get<int>();
        if (p.position != array_index)
            throw ValidationError("post '" + p.post_id + "' has explicit position " +
                                  std::to_string(p.position) + " but appears at array index " +
                                  std::to_string(array_index));
    } else {
        p.position = array_index;
    }
    if (jp.contains("wellbeing")) p.wellbeing = jp.at("wellbeing").get<int>();

    bool has_annotation = jp.contains("labels") || jp.contains("adaptive_presence") ||
                          jp.contains("maladaptive_presence");
    if (has_annotation) {
        PostAnnotation ann;
        if (jp.contains("labels")) {
            for (const auto& jl : jp.at("labels")) {
                LabelTriple t{jl.at("element").get<std::string>(),
                              jl.at("valence").get<std::string>(),
                              jl.at("subelement").get<std::string>()};
                if (t.valence != kValenceAdaptive && t.valence != kValenceMaladaptive)
                    throw ValidationError("valence must be 'adaptive' or 'maladaptive', got '" +
                                          t.valence + "' in post '" + p.post_id + "'");
                if (schema && !schema->contains(t))
                    throw ValidationError("label not in schema: " + t.element + "/" + t.valence +
                                          "/" + t.subelement + " in post '" + p.post_id + "'");
                ann.labels.insert(std::move(t));
            }
        }
        if (jp.contains("adaptive_presence"))
            ann.adaptive_presence = presence_in_range(jp, "adaptive_presence", p.post_id);
        if (jp.contains("maladaptive_presence"))
            ann.maladaptive_presence = presence_in_range(jp, "maladaptive_presence", p.post_id);
        p.gold_annotation = std::move(ann);
    }
    if (jp.contains("switch") || jp.contains("escalation")) {
        ChangeLabel c;
        if (jp.contains("switch")) c.switch_flag = jp.at("switch").get<bool>();
        if (jp.contains("escalation")) c.escalation = jp.at("escalation").get<bool>();
        if (jp.contains("justification")) c.justification = jp.at("justification").get<std::string>();
        p.gold_change = c;
    }
    return p;
}

}  // namespace

Timeline timeline_from_json(const json& j, const LabelSchema* schema) {
    if (!j.is_object()) throw ValidationError("timeline document must be a JSON object");
    Timeline t;
    t.timeline_id = j.at("timeline_id").get<std::string>();
    const auto& jposts = j.at("posts");
    if (!jposts.is_array() || jposts.empty())
        throw ValidationError("timeline '" + t.timeline_id + "' must contain at least 1 post");

    // Posts may arrive out of positional order; sort by explicit position,
    // then validate the array-order contract against the sorted sequence.
    std::vector<json> raw(jposts.begin(), jposts.end());
    std::stable_sort(raw.begin(), raw.end(), [](const json& a, const json& b) {
        int pa = a.contains("position") ? a.at("position").get<int>() : 0;
        int pb = b.contains("position") ? b.at("position").get<int>() : 0;
        return pa < pb;
    });
    std::set<std::string> seen_ids;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        Post p = post_from_json(raw[i], static_cast<int>(i), schema);
        if (!seen_ids.insert(p.post_id).second)
            throw ValidationError("duplicate post_id '" + p.post_id + "' in timeline '" +
                                  t.timeline_id + "'");
        t.posts.push_back(std::move(p));
    }
    if (t.posts.front().gold_change &&
        (t.posts.front().gold_change->switch_flag || t.posts.front().gold_change->escalation))
        throw ValidationError("first post of timeline '" + t.timeline_id +
                              "' cannot carry switch/escalation");
    return t;
}

Timeline parse_timeline(std::string_view bytes, const LabelSchema* schema) {
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
    return timeline_from_json(j, schema);
}

std::vector<Timeline> parse_timelines(std::string_view bytes, const LabelSchema* schema) {
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
    std::vector<Timeline> out;
    if (j.is_array()) {
        for (const auto& jt : j) out.push_back(timeline_from_json(jt, schema));
    } else {
        out.push_back(timeline_from_json(j, schema));
    }
    return out;
}

json timeline_to_json(const Timeline& t) {
    json jposts = json::array();
    for (const auto& p : t.posts) {
        json jp{{"post_id", p.post_id}, {"position", p.position}, {"text", p.text}};
        if (p.wellbeing) jp["wellbeing"] = *p.wellbeing;
        if (p.gold_annotation) {
            const auto& ann = *p.gold_annotation;
            if (!ann.labels.empty()) {
                json jl = json::array();
                for (const auto& l : ann.labels)
                    jl.push_back({{"element", l.element},
                                  {"valence", l.valence},
                                  {"subelement", l.subelement}});
                jp["labels"] = std::move(jl);
            }
            if (ann.adaptive_presence) jp["adaptive_presence"] = *ann.adaptive_presence;
            if (ann.maladaptive_presence) jp["maladaptive_presence"] = *ann.maladaptive_presence;
        }
        if (p.gold_change) {
            jp["switch"] = p.gold_change->switch_flag;
            jp["escalation"] = p.gold_change->escalation;
            if (p.gold_change->justification) jp["justification"] = *p.gold_change->justification;
        }
        jposts.push_back(std::move(jp));
    }
    return json{{"timeline_id", t.timeline_id}, {"posts", std::move(jposts)}};
}

std::vector<Post> context_window(const Timeline& t, int index, int size) {
    if (index < 0 || index >= static_cast<int>(t.posts.size()))
        throw RangeError("context_window index " + std::to_string(index) +
                         " out of bounds for timeline of " + std::to_string(t.posts.size()) +
                         " posts");
    if (size < 0) throw RangeError("context_window size must be >= 0");
    int begin = std::max(0, index - size);
    return {t.posts.begin() + begin, t.posts.begin() + index};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace mindtrace

#include "mindtrace.h"

#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include "mindtrace/core.hpp"
#include "mindtrace/eval.hpp"
#include "mindtrace/forest.hpp"
#include "mindtrace/llm.hpp"
#include "mindtrace/miner.hpp"
#include "mindtrace/ngram.hpp"
#include "mindtrace/summary.hpp"
#include "mindtrace/text_features.hpp"

using nlohmann::json;
using namespace mindtrace;

namespace {
constexpr const char* kVersion = "0.1.0";
}

struct mt_ctx {
    std::optional<LabelSchema> schema;
    std::optional<WordList> negative, positive, stopwords;
    BackendConfig backend;
    TaggerConfig tagger;
    TrainingConfig trees;
    SummaryConfig summary;
    MinerConfig miner;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string last_error;

    json options_json() const {
        return json{{"backend", backend.to_json()},
                    {"tagger", {{"k", tagger.k}, {"min_match", tagger.min_match}}},
                    {"trees",
                     {{"n_trees", trees.n_trees},
                      {"max_depth", trees.max_depth},
                      {"min_samples_leaf", trees.min_samples_leaf},
                      {"pos_weight_cap", trees.pos_weight_cap},
                      {"threshold", trees.threshold}}},
                    {"summary",
                     {{"direction_threshold", summary.direction_threshold},
                      {"max_features", summary.max_features},
                      {"aggregate_mean", summary.aggregate_mean}}},
                    {"miner",
                     {{"batch_size", miner.batch_size},
                      {"direction_threshold", miner.direction_threshold}}},
                    {"seed", seed}};
    }

    json meta() const {
        // FNV-1a over the canonical option dump; stable across runs.
        const std::string dump = options_json().dump();
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : dump) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        std::ostringstream hex;
        hex << std::hex << h;
        return json{{"tool_version", kVersion}, {"config_hash", hex.str()}, {"seed", seed}};
    }
};

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

json parse_json_file(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what(), e.byte);
    }
}

std::vector<Timeline> load_timelines(mt_ctx* ctx, const char* path) {
    const json j = parse_json_file(path);
    const LabelSchema* schema = ctx->schema ? &*ctx->schema : nullptr;
    std::vector<Timeline> out;
    if (j.is_object() && j.contains("timelines")) {
        for (const auto& t : j.at("timelines")) out.push_back(timeline_from_json(t, schema));
    } else if (j.is_array()) {
        for (const auto& t : j) out.push_back(timeline_from_json(t, schema));
    } else {
        out.push_back(timeline_from_json(j, schema));
    }
    require(!out.empty(), std::string(path) + ": no timelines");
    return out;
}

void write_output(mt_ctx* ctx, const char* out_path, json body) {
    body["meta"] = ctx->meta();
    write_file(out_path, body.dump(2) + "\n");
}

const LabelSchema& need_schema(mt_ctx* ctx) {
    require(ctx->schema.has_value(), "no label schema loaded (mt_load_schema)");
    return *ctx->schema;
}

const WordList& need_stopwords(mt_ctx* ctx) {
    require(ctx->stopwords.has_value(), "no stopword list loaded (mt_load_stopwords)");
    return *ctx->stopwords;
}

void need_lexicons(mt_ctx* ctx) {
    require(ctx->negative && ctx->positive, "no sentiment lexicons loaded (mt_load_lexicons)");
}

LlmClient make_client(mt_ctx* ctx) { return LlmClient(ctx->backend); }

json label_to_json(const LabelTriple& l) {
    return json{{"element", l.element}, {"valence", l.valence}, {"subelement", l.subelement}};
}

LabelTriple label_from_json(const json& j) {
    return {j.at("element").get<std::string>(), j.at("valence").get<std::string>(),
            j.at("subelement").get<std::string>()};
}

std::vector<AnnotationPrediction> load_annotation_predictions(mt_ctx* ctx, const char* path) {
    const json j = parse_json_file(path);
    std::vector<AnnotationPrediction> out;
    if (j.is_object() && j.contains("predictions")) {
        for (const auto& r : j.at("predictions")) {
            AnnotationPrediction p;
            p.timeline_id = r.at("timeline_id").get<std::string>();
            p.post_id = r.at("post_id").get<std::string>();
            if (r.contains("labels"))
                for (const auto& l : r.at("labels")) p.labels.insert(label_from_json(l));
            if (r.contains("adaptive_presence"))
                p.adaptive_presence = r.at("adaptive_presence").get<int>();
            if (r.contains("maladaptive_presence"))
                p.maladaptive_presence = r.at("maladaptive_presence").get<int>();
            out.push_back(std::move(p));
        }
        return out;
    }
    // Timelines double as prediction carriers through their gold fields.
    for (const auto& t : load_timelines(ctx, path))
        for (const auto& post : t.posts) {
            AnnotationPrediction p;
            p.timeline_id = t.timeline_id;
            p.post_id = post.post_id;
            if (post.gold_annotation) {
                p.labels = post.gold_annotation->labels;
                p.adaptive_presence = post.gold_annotation->adaptive_presence;
                p.maladaptive_presence = post.gold_annotation->maladaptive_presence;
            }
            out.push_back(std::move(p));
        }
    return out;
}

json annotation_predictions_to_json(const std::vector<AnnotationPrediction>& preds) {
    json arr = json::array();
    for (const auto& p : preds) {
        json r{{"timeline_id", p.timeline_id}, {"post_id", p.post_id}};
        json labels = json::array();
        for (const auto& l : p.labels) labels.push_back(label_to_json(l));
        r["labels"] = std::move(labels);
        if (p.adaptive_presence) r["adaptive_presence"] = *p.adaptive_presence;
        if (p.maladaptive_presence) r["maladaptive_presence"] = *p.maladaptive_presence;
        arr.push_back(std::move(r));
    }
    return arr;
}

// TF-IDF representations for every post of every timeline, in order.
std::vector<std::vector<std::vector<double>>> represent(const std::vector<Timeline>& timelines,
                                                        const TfidfModel& tfidf) {
    std::vector<std::vector<std::vector<double>>> out;
    for (const auto& t : timelines) {
        std::vector<std::vector<double>> rows;
        for (const auto& p : t.posts) rows.push_back(tfidf.transform(tokenize(p.text)));
        out.push_back(std::move(rows));
    }
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ValidationError("csv missing column: " + name);
    }
};

CsvTable read_csv(const std::string& path) {
    std::istringstream in(read_file(path));
    CsvTable table;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (table.header.empty())
            table.header = std::move(cells);
        else
            table.rows.push_back(std::move(cells));
    }
    require(!table.header.empty(), path + ": empty csv");
    return table;
}

mt_status status_for(const std::exception& e) {
    if (dynamic_cast<const ValidationExhaustedError*>(&e)) return MT_ERR_EXHAUSTED;
    if (dynamic_cast<const TimeoutError*>(&e)) return MT_ERR_TIMEOUT;
    if (dynamic_cast<const TransportError*>(&e)) return MT_ERR_TRANSPORT;
    if (dynamic_cast<const EndpointError*>(&e)) return MT_ERR_ENDPOINT;
    if (dynamic_cast<const ParseError*>(&e)) return MT_ERR_PARSE;
    if (dynamic_cast<const RangeError*>(&e)) return MT_ERR_RANGE;
    if (dynamic_cast<const ValidationError*>(&e)) return MT_ERR_VALIDATION;
    return MT_ERR_INTERNAL;
}

template <typename Fn>
mt_status guarded(mt_ctx* ctx, Fn&& fn) {
    if (!ctx) return MT_ERR_VALIDATION;
    ctx->last_error.clear();
    try {
        fn();
        return MT_OK;
    } catch (const std::exception& e) {
        ctx->last_error = e.what();
        return status_for(e);
    } catch (...) {
        ctx->last_error = "unknown error";
        return MT_ERR_INTERNAL;
    }
}

}  // namespace

extern "C" {

const char* mt_version(void) { return kVersion; }

mt_ctx* mt_ctx_new(void) { return new mt_ctx(); }

void mt_ctx_free(mt_ctx* ctx) { delete ctx; }

const char* mt_last_error(const mt_ctx* ctx) { return ctx ? ctx->last_error.c_str() : ""; }

mt_status mt_load_schema(mt_ctx* ctx, const char* path) {
    return guarded(ctx, [&] {
        require(path != nullptr, "schema path is null");
        ctx->schema = LabelSchema::load(path);
    });
}

mt_status mt_load_lexicons(mt_ctx* ctx, const char* negative_path, const char* positive_path) {
    return guarded(ctx, [&] {
        require(negative_path && positive_path, "lexicon path is null");
        ctx->negative = WordList::load(negative_path);
        ctx->positive = WordList::load(positive_path);
    });
}

mt_status mt_load_stopwords(mt_ctx* ctx, const char* path) {
    return guarded(ctx, [&] {
        require(path != nullptr, "stopword path is null");
        ctx->stopwords = WordList::load(path);
    });
}

mt_status mt_set_backend_json(mt_ctx* ctx, const char* json_text) {
    return guarded(ctx, [&] {
        if (!json_text || !*json_text) {
            ctx->backend = BackendConfig{};
            return;
        }
        json j;
        try {
            j = json::parse(json_text);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("backend config: ") + e.what(), e.byte);
        }
        ctx->backend = BackendConfig::from_json(j);
    });
}

mt_status mt_set_option(mt_ctx* ctx, const char* key, const char* value) {
    return guarded(ctx, [&] {
        require(key && value, "option key/value is null");
        const std::string k(key), v(value);
        auto as_int = [&] {
            try {
                return std::stoi(v);
            } catch (const std::exception&) {
                throw ValidationError("option " + k + ": not an integer: " + v);
            }
        };
        auto as_double = [&] {
            try {
                return std::stod(v);
            } catch (const std::exception&) {
                throw ValidationError("option " + k + ": not a number: " + v);
            }
        };
        if (k == "seed") {
            try {
                ctx->seed = std::stoull(v);
            } catch (const std::exception&) {
                throw ValidationError("option seed: not an integer: " + v);
            }
            ctx->trees.seed = ctx->seed;
        } else if (k == "jobs") {
            ctx->jobs = as_int();
            require(ctx->jobs >= 1, "jobs must be >= 1");
        } else if (k == "tagger.k") {
            ctx->tagger.k = as_int();
        } else if (k == "tagger.min_match") {
            ctx->tagger.min_match = as_int();
        } else if (k == "trees.n_trees") {
            ctx->trees.n_trees = as_int();
        } else if (k == "trees.max_depth") {
            ctx->trees.max_depth = as_int();
        } else if (k == "trees.min_samples_leaf") {
            ctx->trees.min_samples_leaf = as_int();
        } else if (k == "trees.pos_weight_cap") {
            ctx->trees.pos_weight_cap = as_double();
        } else if (k == "trees.threshold") {
            ctx->trees.threshold = as_double();
        } else if (k == "summary.direction_threshold") {
            ctx->summary.direction_threshold = as_double();
            ctx->miner.direction_threshold = ctx->summary.direction_threshold;
        } else if (k == "summary.max_features") {
            ctx->summary.max_features = static_cast<std::size_t>(as_int());
        } else if (k == "summary.aggregate_mean") {
            require(v == "true" || v == "false", "summary.aggregate_mean must be true/false");
            ctx->summary.aggregate_mean = v == "true";
        } else if (k == "miner.batch_size") {
            ctx->miner.batch_size = as_int();
        } else {
            throw ValidationError("unknown option: " + k);
        }
    });
}

mt_status mt_extract_signatures(mt_ctx* ctx, const char* timelines_path, const char* out_path) {
    return guarded(ctx, [&] {
        require(timelines_path && out_path, "path is null");
        const auto timelines = load_timelines(ctx, timelines_path);
        const auto corpus = corpus_from_timelines(timelines);
        const auto sigs = extract_signatures(corpus, need_stopwords(ctx), ctx->tagger);
        write_output(ctx, out_path, sigs.to_json());
    });
}

mt_status mt_tag(mt_ctx* ctx, const char* signatures_path, const char* timelines_path,
                 const char* out_path) {
    return guarded(ctx, [&] {
        require(signatures_path && timelines_path && out_path, "path is null");
        const auto sigs = SignatureSet::from_json(parse_json_file(signatures_path));
        const auto timelines = load_timelines(ctx, timelines_path);
        const auto& stopwords = need_stopwords(ctx);
        std::vector<AnnotationPrediction> preds;
        for (const auto& t : timelines)
            for (const auto& p : t.posts) {
                AnnotationPrediction ap;
                ap.timeline_id = t.timeline_id;
                ap.post_id = p.post_id;
                ap.labels = tag_post(p, sigs, stopwords, ctx->tagger);
                preds.push_back(std::move(ap));
            }
        write_output(ctx, out_path, json{{"predictions", annotation_predictions_to_json(preds)}});
    });
}

mt_status mt_train_presence(mt_ctx* ctx, const char* timelines_path, const char* model_out_path) {
    return guarded(ctx, [&] {
        require(timelines_path && model_out_path, "path is null");
        const auto& schema = need_schema(ctx);
        const auto timelines = load_timelines(ctx, timelines_path);
        std::vector<std::pair<std::vector<double>, double>> adaptive_rows, maladaptive_rows;
        for (const auto& t : timelines)
            for (const auto& p : t.posts) {
                if (!p.gold_annotation) continue;
                const auto x = one_hot_encode(p.gold_annotation->labels, schema);
                if (p.gold_annotation->adaptive_presence)
                    adaptive_rows.push_back(
                        {x, static_cast<double>(*p.gold_annotation->adaptive_presence)});
                if (p.gold_annotation->maladaptive_presence)
                    maladaptive_rows.push_back(
                        {x, static_cast<double>(*p.gold_annotation->maladaptive_presence)});
            }
        require(adaptive_rows.size() >= 2, "fewer than 2 adaptive presence annotations");
        require(maladaptive_rows.size() >= 2, "fewer than 2 maladaptive presence annotations");
        const auto adaptive = train_presence_regressor(adaptive_rows, ctx->trees);
        const auto maladaptive = train_presence_regressor(maladaptive_rows, ctx->trees);
        write_output(ctx, model_out_path,
                     json{{"format", "mindtrace-presence"},
                          {"version", 1},
                          {"adaptive", adaptive.to_json()},
                          {"maladaptive", maladaptive.to_json()}});
    });
}

mt_status mt_score_presence(mt_ctx* ctx, const char* model_path, const char* input_path,
                            const char* out_path) {
    return guarded(ctx, [&] {
        require(model_path && input_path && out_path, "path is null");
        const json mj = parse_json_file(model_path);
        require(mj.value("format", "") == "mindtrace-presence",
                std::string(model_path) + ": not a presence model");
        const auto adaptive = ForestModel::from_json(mj.at("adaptive"));
        const auto maladaptive = ForestModel::from_json(mj.at("maladaptive"));
        const auto& schema = need_schema(ctx);
        auto preds = load_annotation_predictions(ctx, input_path);
        for (auto& p : preds) {
            const auto x = one_hot_encode(p.labels, schema);
            p.adaptive_presence = predict_presence(adaptive, x);
            p.maladaptive_presence = predict_presence(maladaptive, x);
        }
        write_output(ctx, out_path, json{{"predictions", annotation_predictions_to_json(preds)}});
    });
}

mt_status mt_train_change(mt_ctx* ctx, const char* timelines_path, const char* model_out_path) {
    return guarded(ctx, [&] {
        require(timelines_path && model_out_path, "path is null");
        need_lexicons(ctx);
        const auto timelines = load_timelines(ctx, timelines_path);
        std::vector<TokenizedText> corpus;
        for (const auto& t : timelines)
            for (const auto& p : t.posts) corpus.push_back(tokenize(p.text));
        const auto tfidf = TfidfModel::fit(corpus);
        const auto reps = represent(timelines, tfidf);

        std::vector<std::pair<std::vector<double>, bool>> switch_rows, escalation_rows;
        for (std::size_t i = 0; i < timelines.size(); ++i) {
            const auto features = assemble_change_features(timelines[i], reps[i], *ctx->negative,
                                                           *ctx->positive);
            // Post 0 is governed by the forced no-change rule, not the model.
            for (std::size_t p = 1; p < features.size(); ++p) {
                const auto& change = timelines[i].posts[p].gold_change;
                switch_rows.push_back({features[p], change && change->switch_flag});
                escalation_rows.push_back({features[p], change && change->escalation});
            }
        }
        const auto switch_model = train_change_classifier(switch_rows, ctx->trees);
        const auto escalation_model = train_change_classifier(escalation_rows, ctx->trees);
        write_output(ctx, model_out_path,
                     json{{"format", "mindtrace-change"},
                          {"version", 1},
                          {"tfidf", tfidf.to_json()},
                          {"switch", switch_model.to_json()},
                          {"escalation", escalation_model.to_json()}});
    });
}

mt_status mt_detect_tree(mt_ctx* ctx, const char* model_path, const char* timelines_path,
                         const char* out_path) {
    return guarded(ctx, [&] {
        require(model_path && timelines_path && out_path, "path is null");
        need_lexicons(ctx);
        const json mj = parse_json_file(model_path);
        require(mj.value("format", "") == "mindtrace-change",
                std::string(model_path) + ": not a change model");
        const auto tfidf = TfidfModel::from_json(mj.at("tfidf"));
        const auto switch_model = ForestModel::from_json(mj.at("switch"));
        const auto escalation_model = ForestModel::from_json(mj.at("escalation"));
        const auto timelines = load_timelines(ctx, timelines_path);
        const auto reps = represent(timelines, tfidf);

        json records = json::array();
        for (std::size_t i = 0; i < timelines.size(); ++i) {
            const auto features = assemble_change_features(timelines[i], reps[i], *ctx->negative,
                                                           *ctx->positive);
            for (std::size_t p = 0; p < features.size(); ++p) {
                const bool first = p == 0;
                records.push_back(
                    {{"timeline_id", timelines[i].timeline_id},
                     {"post_id", timelines[i].posts[p].post_id},
                     {"switch",
                      !first && predict_change(switch_model, features[p], ctx->trees.threshold)},
                     {"escalation", !first && predict_change(escalation_model, features[p],
                                                             ctx->trees.threshold)}});
            }
        }
        write_output(ctx, out_path, json{{"predictions", std::move(records)}});
    });
}

mt_status mt_detect_llm(mt_ctx* ctx, const char* fewshot_path, const char* timelines_path,
                        const char* out_path) {
    return guarded(ctx, [&] {
        require(fewshot_path && timelines_path && out_path, "path is null");
        const auto bank = FewShotBank::load(fewshot_path);
        const auto timelines = load_timelines(ctx, timelines_path);
        const auto client = make_client(ctx);
        json records = json::array();
        for (const auto& t : timelines) {
            const auto preds = detect_changes_llm(t, bank, client);
            for (std::size_t p = 0; p < preds.size(); ++p)
                records.push_back({{"timeline_id", t.timeline_id},
                                   {"post_id", t.posts[p].post_id},
                                   {"switch", preds[p].switch_flag},
                                   {"escalation", preds[p].escalation},
                                   {"justification", preds[p].justification},
                                   {"retries", preds[p].retries}});
        }
        write_output(ctx, out_path, json{{"predictions", std::move(records)}});
    });
}

mt_status mt_summarize_template(mt_ctx* ctx, const char* timelines_path, const char* out_path) {
    return guarded(ctx, [&] {
        require(timelines_path && out_path, "path is null");
        const auto timelines = load_timelines(ctx, timelines_path);
        json summaries = json::array();
        for (const auto& t : timelines) {
            const auto s = render_summary(summary_inputs(t, ctx->summary), ctx->summary);
            json r = s.to_json();
            r["timeline_id"] = t.timeline_id;
            summaries.push_back(std::move(r));
        }
        write_output(ctx, out_path, json{{"summaries", std::move(summaries)}});
    });
}

mt_status mt_summarize_llm(mt_ctx* ctx, const char* timelines_path, const char* examples_path,
                           const char* out_path) {
    return guarded(ctx, [&] {
        require(timelines_path && out_path, "path is null");
        std::vector<std::string> examples;
        if (examples_path) {
            const json ej = parse_json_file(examples_path);
            const json& arr = ej.is_object() && ej.contains("examples") ? ej.at("examples") : ej;
            require(arr.is_array(), std::string(examples_path) + ": expected an array");
            for (const auto& e : arr) examples.push_back(e.get<std::string>());
        }
        const auto timelines = load_timelines(ctx, timelines_path);
        const auto client = make_client(ctx);
        json summaries = json::array();
        for (const auto& t : timelines) {
            const std::string text = client.complete(build_summary_prompt(t, examples));
            summaries.push_back({{"timeline_id", t.timeline_id}, {"text", text}});
        }
        write_output(ctx, out_path, json{{"summaries", std::move(summaries)}});
    });
}

mt_status mt_mine_signatures(mt_ctx* ctx, const char* bundles_path, const char* out_path) {
    return guarded(ctx, [&] {
        require(bundles_path && out_path, "path is null");
        const json bj = parse_json_file(bundles_path);
        require(bj.is_object() && bj.contains("sequences"),
                std::string(bundles_path) + ": expected {\"sequences\": [...]}");
        const LabelSchema* schema = ctx->schema ? &*ctx->schema : nullptr;
        std::vector<SequenceBundle> bundles;
        for (const auto& s : bj.at("sequences")) {
            SequenceBundle b;
            b.sequence_id = s.at("sequence_id").get<std::string>();
            b.timeline = timeline_from_json(s.at("timeline"), schema);
            if (s.contains("gold_summary")) b.gold_summary = s.at("gold_summary").get<std::string>();
            bundles.push_back(std::move(b));
        }
        require(!bundles.empty(), std::string(bundles_path) + ": no sequences");
        const auto result = mine_signatures(bundles, make_client(ctx), ctx->miner);
        write_output(ctx, out_path, result.to_json());
    });
}

mt_status mt_augment(mt_ctx* ctx, const char* request_path, const char* out_path) {
    return guarded(ctx, [&] {
        require(request_path && out_path, "path is null");
        const json rj = parse_json_file(request_path);
        const LabelTriple label = label_from_json(rj.at("label"));
        const std::string definition = rj.at("definition").get<std::string>();
        const auto evidence = rj.at("evidence").get<std::vector<std::string>>();
        const int n_new = rj.value("n_new", 5);
        const std::string prompt = build_augmentation_prompt(label, definition, evidence, n_new);
        const auto client = make_client(ctx);
        static const FieldSpec kSchema[] = {{"examples", json::value_t::array}};
        const std::string raw = client.complete(prompt);
        const json j = parse_validated(
            raw, kSchema,
            [&] {
                return client.complete(prompt +
                                       "\nReminder: respond with exactly one JSON object "
                                       "{\"examples\": [string, ...]} and nothing else.");
            },
            ctx->backend.max_retries);
        std::vector<std::string> examples;
        for (const auto& e : j.at("examples")) {
            require(e.is_string(), "augmentation example is not a string");
            examples.push_back(e.get<std::string>());
        }
        write_output(ctx, out_path,
                     json{{"label", label_to_json(label)}, {"examples", examples}});
    });
}

mt_status mt_evaluate_task1(mt_ctx* ctx, const char* preds_path, const char* gold_path,
                            const char* out_path) {
    return guarded(ctx, [&] {
        require(preds_path && gold_path && out_path, "path is null");
        const auto& schema = need_schema(ctx);
        const auto preds = load_annotation_predictions(ctx, preds_path);
        const auto gold = load_timelines(ctx, gold_path);
        write_output(ctx, out_path, task1_report(preds, gold, schema).to_json());
    });
}

mt_status mt_evaluate_task2(mt_ctx* ctx, const char* preds_path, const char* gold_path,
                            const char* out_path) {
    return guarded(ctx, [&] {
        require(preds_path && gold_path && out_path, "path is null");
        const json pj = parse_json_file(preds_path);
        require(pj.is_object() && pj.contains("predictions"),
                std::string(preds_path) + ": expected {\"predictions\": [...]}");
        std::vector<ChangePredictionRecord> preds;
        for (const auto& r : pj.at("predictions")) {
            ChangePredictionRecord rec;
            rec.timeline_id = r.at("timeline_id").get<std::string>();
            rec.post_id = r.at("post_id").get<std::string>();
            rec.switch_flag = r.at("switch").get<bool>();
            rec.escalation = r.at("escalation").get<bool>();
            if (r.contains("justification"))
                rec.justification = r.at("justification").get<std::string>();
            preds.push_back(std::move(rec));
        }
        const auto gold = load_timelines(ctx, gold_path);
        write_output(ctx, out_path, task2_report(preds, gold).to_json());
    });
}

mt_status mt_evaluate_rankings(mt_ctx* ctx, const char* task1_csv_path,
                               const char* task31_csv_path, const char* out_path) {
    return guarded(ctx, [&] {
        require(out_path != nullptr, "output path is null");
        require(task1_csv_path || task31_csv_path, "no rankings csv supplied");
        json body = json::object();
        if (task1_csv_path) {
            const auto table = read_csv(task1_csv_path);
            const auto f1_col = table.column("task11_macro_f1");
            const auto rmse_col = table.column("task12_rmse");
            std::vector<double> f1, rmse;
            for (const auto& row : table.rows) {
                f1.push_back(std::stod(row[f1_col]));
                rmse.push_back(std::stod(row[rmse_col]));
            }
            const auto corr = pearson_correlation(f1, rmse);
            body["task1_correlation"] = {{"r", corr.r}, {"p", corr.p}, {"n", f1.size()}};
        }
        if (task31_csv_path) {
            const auto table = read_csv(task31_csv_path);
            const auto team_col = table.column("team");
            const std::size_t cols[] = {table.column("cs"), table.column("ct"),
                                        table.column("rouge_l"), table.column("bertscore")};
            std::vector<std::vector<double>> scores;
            std::vector<std::string> teams;
            for (const auto& row : table.rows) {
                teams.push_back(row[team_col]);
                scores.push_back({std::stod(row[cols[0]]), std::stod(row[cols[1]]),
                                  std::stod(row[cols[2]]), std::stod(row[cols[3]])});
            }
            // CS, ROUGE-L and BERTScore reward higher values; CT lower.
            const auto ranks = rank_average(scores, {true, false, true, true});
            json systems = json::array();
            for (std::size_t i = 0; i < teams.size(); ++i)
                systems.push_back({{"team", teams[i]},
                                   {"avg_rank", ranks.avg_rank[i]},
                                   {"final_rank", ranks.final_rank[i]}});
            body["task31_rankings"] = std::move(systems);
        }
        write_output(ctx, out_path, std::move(body));
    });
}

mt_status mt_kfold(mt_ctx* ctx, const char* timelines_path, int k, const char* out_path) {
    return guarded(ctx, [&] {
        require(timelines_path && out_path, "path is null");
        const auto timelines = load_timelines(ctx, timelines_path);
        std::vector<std::string> ids;
        for (const auto& t : timelines) ids.push_back(t.timeline_id);
        const auto folds = kfold_split(ids, k, ctx->seed);
        write_output(ctx, out_path, json{{"k", k}, {"folds", folds}});
    });
}

mt_status mt_pos_weight(mt_ctx* ctx, double n_neg, double n_pos, double cap, double* out) {
    return guarded(ctx, [&] {
        require(out != nullptr, "output pointer is null");
        require(n_neg >= 0 && n_pos >= 0, "counts must be non-negative");
        *out = pos_weight(static_cast<std::size_t>(n_neg), static_cast<std::size_t>(n_pos), cap);
    });
}

mt_status mt_llr_score(mt_ctx* ctx, double k11, double k12, double k21, double k22, double* out) {
    return guarded(ctx, [&] {
        require(out != nullptr, "output pointer is null");
        *out = llr_score(k11, k12, k21, k22);
    });
}

mt_status mt_rouge_l_recall(mt_ctx* ctx, const char* candidate, const char* reference,
                            double* out) {
    return guarded(ctx, [&] {
        require(candidate && reference && out, "argument is null");
        *out = rouge_l_recall(candidate, reference);
    });
}

}  // extern "C"

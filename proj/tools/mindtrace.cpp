// mindtrace command line tool. Links only the C API; all pipeline logic
// lives in the shared library.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mindtrace.h"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitBackend = 3;
constexpr int kExitInternal = 4;

int exit_code_for(mt_status status) {
    switch (status) {
        case MT_OK:
            return kExitOk;
        case MT_ERR_PARSE:
        case MT_ERR_VALIDATION:
        case MT_ERR_RANGE:
            return kExitUsage;
        case MT_ERR_TRANSPORT:
        case MT_ERR_TIMEOUT:
        case MT_ERR_ENDPOINT:
        case MT_ERR_EXHAUSTED:
            return kExitBackend;
        default:
            return kExitInternal;
    }
}

struct Paths {
    std::string schema;
    std::string lexicon_negative;
    std::string lexicon_positive;
    std::string stopwords;
};

// Mutable CLI state shared across subcommands.
struct Cli {
    mt_ctx* ctx = nullptr;
    Paths paths;
    std::string config_path;
    std::string seed = "0";
    int jobs = 1;
    bool dry_run = false;
    json backend = json::object();  // accumulated backend overrides
    std::vector<std::pair<std::string, std::string>> options;

    // backend flags
    std::string backend_url, backend_model;
    int max_retries = -1;
    double temperature = -1;
};

[[noreturn]] void fail(mt_ctx* ctx, mt_status status) {
    std::cerr << "error: " << mt_last_error(ctx) << "\n";
    std::exit(exit_code_for(status));
}

void check(mt_ctx* ctx, mt_status status) {
    if (status != MT_OK) fail(ctx, status);
}

json load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open config file: " << path << "\n";
        std::exit(kExitUsage);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        std::cerr << "error: config file " << path << ": " << e.what() << "\n";
        std::exit(kExitUsage);
    }
}

// Precedence: CLI flag > environment > config file > default.
void configure(Cli& cli) {
    json file_backend = json::object();
    if (!cli.config_path.empty()) {
        const json cfg = load_config_file(cli.config_path);
        for (const auto& [key, value] : cfg.items()) {
            if (key == "schema") {
                if (cli.paths.schema.empty()) cli.paths.schema = value.get<std::string>();
            } else if (key == "lexicon_negative") {
                if (cli.paths.lexicon_negative.empty())
                    cli.paths.lexicon_negative = value.get<std::string>();
            } else if (key == "lexicon_positive") {
                if (cli.paths.lexicon_positive.empty())
                    cli.paths.lexicon_positive = value.get<std::string>();
            } else if (key == "stopwords") {
                if (cli.paths.stopwords.empty()) cli.paths.stopwords = value.get<std::string>();
            } else if (key == "backend") {
                file_backend = value;
            } else if (key == "seed") {
                if (cli.seed == "0") cli.seed = std::to_string(value.get<long long>());
            } else if (key == "tagger" || key == "trees" || key == "summary" || key == "miner") {
                for (const auto& [opt, v] : value.items()) {
                    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
                    cli.options.insert(cli.options.begin(), {key + "." + opt, s});
                }
            } else {
                std::cerr << "error: unknown config key: " << key << "\n";
                std::exit(kExitUsage);
            }
        }
    }

    json backend = file_backend;
    if (const char* url = std::getenv("MINDTRACE_LLM_URL")) backend["endpoint_url"] = url;
    if (const char* model = std::getenv("MINDTRACE_LLM_MODEL")) backend["model_name"] = model;
    if (!cli.backend_url.empty()) backend["endpoint_url"] = cli.backend_url;
    if (!cli.backend_model.empty()) backend["model_name"] = cli.backend_model;
    if (cli.max_retries >= 0) backend["max_retries"] = cli.max_retries;
    if (cli.temperature >= 0) backend["temperature"] = cli.temperature;
    cli.backend = backend;

    check(cli.ctx, mt_set_backend_json(cli.ctx, backend.dump().c_str()));
    check(cli.ctx, mt_set_option(cli.ctx, "seed", cli.seed.c_str()));
    check(cli.ctx, mt_set_option(cli.ctx, "jobs", std::to_string(cli.jobs).c_str()));
    for (const auto& [key, value] : cli.options)
        check(cli.ctx, mt_set_option(cli.ctx, key.c_str(), value.c_str()));

    if (!cli.paths.schema.empty())
        check(cli.ctx, mt_load_schema(cli.ctx, cli.paths.schema.c_str()));
    if (!cli.paths.lexicon_negative.empty() || !cli.paths.lexicon_positive.empty()) {
        if (cli.paths.lexicon_negative.empty() || cli.paths.lexicon_positive.empty()) {
            std::cerr << "error: both --lexicon-neg and --lexicon-pos are required\n";
            std::exit(kExitUsage);
        }
        check(cli.ctx, mt_load_lexicons(cli.ctx, cli.paths.lexicon_negative.c_str(),
                                        cli.paths.lexicon_positive.c_str()));
    }
    if (!cli.paths.stopwords.empty())
        check(cli.ctx, mt_load_stopwords(cli.ctx, cli.paths.stopwords.c_str()));
}

// Runs `op` writing to `out`; under --dry-run the output goes to a scratch
// file that is removed, so inputs are still fully validated.
template <typename Op>
void run_to_file(Cli& cli, const std::string& out, Op&& op) {
    std::string target = out;
    if (cli.dry_run) target = out + ".dryrun.tmp";
    check(cli.ctx, op(target.c_str()));
    if (cli.dry_run) {
        std::remove(target.c_str());
        std::cout << "dry run ok; no output written\n";
    } else {
        std::cout << "wrote " << out << "\n";
    }
}

json read_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return json::parse(ss.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mindtrace: timeline self-state tagging, change detection, "
                 "summarization and evaluation"};
    app.set_version_flag("--version", std::string(mt_version()));
    app.require_subcommand(1);

    Cli cli;
    cli.ctx = mt_ctx_new();

    app.add_option("--config", cli.config_path, "config file (JSON)");
    app.add_option("--schema", cli.paths.schema, "label schema file");
    app.add_option("--lexicon-neg", cli.paths.lexicon_negative, "negative sentiment word list");
    app.add_option("--lexicon-pos", cli.paths.lexicon_positive, "positive sentiment word list");
    app.add_option("--stopwords", cli.paths.stopwords, "stopword list");
    app.add_option("--seed", cli.seed, "random seed");
    app.add_option("--jobs", cli.jobs, "worker thread bound");
    app.add_flag("--dry-run", cli.dry_run, "validate inputs, write nothing");
    app.add_option("--backend-url", cli.backend_url, "chat completion endpoint URL");
    app.add_option("--backend-model", cli.backend_model, "model name sent to the endpoint");
    app.add_option("--max-retries", cli.max_retries, "format retries per structured response");
    app.add_option("--temperature", cli.temperature, "sampling temperature");
    app.add_option("--set", cli.options,
                   "extra option as key=value (tagger.k, trees.n_trees, ...)")
        ->delimiter('=');

    std::string input, output, model, signatures, fewshot, examples, preds, gold;
    std::string mode, task;
    int k = 5;

    auto* tag = app.add_subcommand("tag", "assign self-state labels with mined signatures");
    tag->add_option("--signatures", signatures, "signature set file")->required();
    tag->add_option("--input", input, "timelines file")->required();
    tag->add_option("--output", output, "predictions file")->required();

    auto* extract = app.add_subcommand("extract-signatures",
                                       "mine label signature n-grams from annotated timelines");
    extract->add_option("--input", input, "annotated timelines file")->required();
    extract->add_option("--output", output, "signature set file")->required();

    auto* detect = app.add_subcommand("detect", "detect switch/escalation change points");
    detect->add_option("--mode", mode, "llm or tree")->required();
    detect->add_option("--model", model, "change model file (tree mode)");
    detect->add_option("--fewshot", fewshot, "few-shot example bank (llm mode)");
    detect->add_option("--input", input, "timelines file")->required();
    detect->add_option("--output", output, "predictions file")->required();

    auto* summarize = app.add_subcommand("summarize", "summarize change sequences");
    summarize->add_option("--mode", mode, "template or llm")->required();
    summarize->add_option("--input", input, "timelines file")->required();
    summarize->add_option("--output", output, "summaries file")->required();
    summarize->add_option("--examples", examples, "example summaries file (llm mode)");

    auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold data");
    evaluate->add_option("--task", task, "1, 2 or 3")->required();
    evaluate->add_option("--preds", preds, "predictions file (tasks 1 and 2)");
    evaluate->add_option("--gold", gold, "gold timelines file (tasks 1 and 2)");
    std::string task1_csv, task31_csv;
    evaluate->add_option("--task1-csv", task1_csv, "rankings csv for the correlation (task 3)");
    evaluate->add_option("--task31-csv", task31_csv, "metrics csv for rank averaging (task 3)");
    evaluate->add_option("--output", output, "report file")->required();

    auto* augment = app.add_subcommand("augment", "generate synthetic label evidence");
    augment->add_option("--request", input, "augmentation request file")->required();
    augment->add_option("--output", output, "examples file")->required();

    auto* train_presence = app.add_subcommand("train-presence",
                                              "train presence regressors from annotations");
    train_presence->add_option("--input", input, "annotated timelines file")->required();
    train_presence->add_option("--model-out", model, "model file to write")->required();

    auto* score_presence = app.add_subcommand("score-presence",
                                              "predict presence ratings from labels");
    score_presence->add_option("--model", model, "presence model file")->required();
    score_presence->add_option("--input", input, "predictions or timelines file")->required();
    score_presence->add_option("--output", output, "predictions file")->required();

    auto* train_change = app.add_subcommand("train-change",
                                            "train switch/escalation classifiers");
    train_change->add_option("--input", input, "annotated timelines file")->required();
    train_change->add_option("--model-out", model, "model file to write")->required();

    auto* mine = app.add_subcommand("mine-signatures",
                                    "mine dynamic change signatures with the backend");
    mine->add_option("--input", input, "sequence bundles file")->required();
    mine->add_option("--output", output, "signatures file")->required();

    auto* kfold = app.add_subcommand("split-kfold", "split timeline ids into k folds");
    kfold->add_option("--input", input, "timelines file")->required();
    kfold->add_option("--k", k, "number of folds");
    kfold->add_option("--output", output, "folds file")->required();

    // Global flags may appear after the subcommand name.
    for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        mt_ctx_free(cli.ctx);
        return rc == 0 ? 0 : kExitUsage;
    }

    configure(cli);
    mt_ctx* ctx = cli.ctx;

    if (tag->parsed()) {
        run_to_file(cli, output, [&](const char* out) {
            return mt_tag(ctx, signatures.c_str(), input.c_str(), out);
        });
    } else if (extract->parsed()) {
        run_to_file(cli, output, [&](const char* out) {
            return mt_extract_signatures(ctx, input.c_str(), out);
        });
    } else if (detect->parsed()) {
        if (mode == "tree") {
            if (model.empty()) {
                std::cerr << "error: detect --mode tree requires --model\n";
                return kExitUsage;
            }
            run_to_file(cli, output, [&](const char* out) {
                return mt_detect_tree(ctx, model.c_str(), input.c_str(), out);
            });
        } else if (mode == "llm") {
            if (fewshot.empty()) {
                std::cerr << "error: detect --mode llm requires --fewshot\n";
                return kExitUsage;
            }
            if (cli.backend.value("endpoint_url", "").empty() &&
                !std::getenv("MINDTRACE_LLM_URL") && cli.backend_url.empty() &&
                cli.config_path.empty()) {
                std::cerr << "error: detect --mode llm requires a backend "
                             "(--backend-url, MINDTRACE_LLM_URL or a config file)\n";
                return kExitUsage;
            }
            run_to_file(cli, output, [&](const char* out) {
                return mt_detect_llm(ctx, fewshot.c_str(), input.c_str(), out);
            });
        } else {
            std::cerr << "error: unknown detect mode: " << mode << "\n";
            return kExitUsage;
        }
    } else if (summarize->parsed()) {
        if (mode == "template") {
            run_to_file(cli, output, [&](const char* out) {
                return mt_summarize_template(ctx, input.c_str(), out);
            });
        } else if (mode == "llm") {
            run_to_file(cli, output, [&](const char* out) {
                return mt_summarize_llm(ctx, input.c_str(),
                                        examples.empty() ? nullptr : examples.c_str(), out);
            });
        } else {
            std::cerr << "error: unknown summarize mode: " << mode << "\n";
            return kExitUsage;
        }
    } else if (evaluate->parsed()) {
        if (task == "1") {
            if (preds.empty() || gold.empty()) {
                std::cerr << "error: evaluate --task 1 requires --preds and --gold\n";
                return kExitUsage;
            }
            run_to_file(cli, output, [&](const char* out) {
                return mt_evaluate_task1(ctx, preds.c_str(), gold.c_str(), out);
            });
            if (!cli.dry_run) {
                const json rep = read_report(output);
                std::cout << "final macro F1: " << rep.at("final_f1").get<double>()
                          << "  ranking RMSE: " << rep.at("ranking_score").get<double>() << "\n";
            }
        } else if (task == "2") {
            if (preds.empty() || gold.empty()) {
                std::cerr << "error: evaluate --task 2 requires --preds and --gold\n";
                return kExitUsage;
            }
            run_to_file(cli, output, [&](const char* out) {
                return mt_evaluate_task2(ctx, preds.c_str(), gold.c_str(), out);
            });
            if (!cli.dry_run) {
                const json rep = read_report(output);
                std::cout << "final F1: " << rep.at("final_f1").get<double>() << "\n";
            }
        } else if (task == "3") {
            if (task1_csv.empty() && task31_csv.empty()) {
                std::cerr << "error: evaluate --task 3 requires --task1-csv or --task31-csv\n";
                return kExitUsage;
            }
            run_to_file(cli, output, [&](const char* out) {
                return mt_evaluate_rankings(ctx, task1_csv.empty() ? nullptr : task1_csv.c_str(),
                                            task31_csv.empty() ? nullptr : task31_csv.c_str(),
                                            out);
            });
            if (!cli.dry_run) {
                const json rep = read_report(output);
                if (rep.contains("task1_correlation"))
                    std::cout << "correlation r: "
                              << rep.at("task1_correlation").at("r").get<double>() << "\n";
                if (rep.contains("task31_rankings"))
                    std::cout << "systems ranked: " << rep.at("task31_rankings").size() << "\n";
            }
        } else {
            std::cerr << "error: unknown task: " << task << "\n";
            return kExitUsage;
        }
    } else if (augment->parsed()) {
        run_to_file(cli, output, [&](const char* out) {
            return mt_augment(ctx, input.c_str(), out);
        });
    } else if (train_presence->parsed()) {
        run_to_file(cli, model, [&](const char* out) {
            return mt_train_presence(ctx, input.c_str(), out);
        });
    } else if (score_presence->parsed()) {
        run_to_file(cli, output, [&](const char* out) {
            return mt_score_presence(ctx, model.c_str(), input.c_str(), out);
        });
    } else if (train_change->parsed()) {
        run_to_file(cli, model, [&](const char* out) {
            return mt_train_change(ctx, input.c_str(), out);
        });
    } else if (mine->parsed()) {
        run_to_file(cli, output, [&](const char* out) {
            return mt_mine_signatures(ctx, input.c_str(), out);
        });
    } else if (kfold->parsed()) {
        run_to_file(cli, output, [&](const char* out) {
            return mt_kfold(ctx, input.c_str(), k, out);
        });
    }

    mt_ctx_free(cli.ctx);
    return kExitOk;
}

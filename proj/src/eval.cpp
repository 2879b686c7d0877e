#include "mindtrace/eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace mindtrace {

using nlohmann::json;

Prf prf1(const ConfusionCounts& c) {
    Prf out;
    out.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
    out.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
    out.f1 = (out.precision + out.recall) > 0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

namespace {

std::vector<double> average_ranks(std::span<const int> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson_r(std::span<const double> xs, std::span<const double> ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0 || syy <= 0) throw ValidationError("correlation undefined for zero variance");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

PresenceMetrics presence_metrics(std::span<const int> pred, std::span<const int> gold) {
    if (pred.size() != gold.size())
        throw ValidationError("presence_metrics length mismatch: " + std::to_string(pred.size()) +
                              " vs " + std::to_string(gold.size()));
    if (pred.size() < 2) throw ValidationError("presence_metrics requires >= 2 samples");

    PresenceMetrics m;
    const double n = static_cast<double>(pred.size());
    double abs_sum = 0, sq_sum = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - gold[i];
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(sq_sum / n);

    // Quadratic weighted kappa over the 5 ordinal categories.
    constexpr int K = 5;
    double observed[K][K] = {};
    double pred_margin[K] = {}, gold_margin[K] = {};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 1 || pred[i] > K || gold[i] < 1 || gold[i] > K)
            throw ValidationError("presence values must lie in [1,5]");
        observed[pred[i] - 1][gold[i] - 1] += 1;
        pred_margin[pred[i] - 1] += 1;
        gold_margin[gold[i] - 1] += 1;
    }
    double num = 0, den = 0;
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            const double w = static_cast<double>((i - j) * (i - j)) / ((K - 1) * (K - 1));
            num += w * observed[i][j];
            den += w * pred_margin[i] * gold_margin[j] / n;
        }
    m.qwk = den > 0 ? 1.0 - num / den : 1.0;

    // Spearman: Pearson over average ranks.
    const auto rp = average_ranks(pred);
    const auto rg = average_ranks(gold);
    auto var0 = [](const std::vector<double>& r) {
        for (double v : r)
            if (v != r[0]) return false;
        return true;
    };
    if (var0(rp) || var0(rg)) {
        // Degenerate constant vector(s): concordant iff both are constant.
        m.spearman = (var0(rp) && var0(rg)) ? 1.0 : 0.0;
    } else {
        m.spearman = pearson_r(rp, rg);
    }
    return m;
}

namespace {

using PostKey = std::pair<std::string, std::string>;  // (timeline_id, post_id)

}  // namespace

Task1Report task1_report(std::span<const AnnotationPrediction> preds,
                         std::span<const Timeline> gold, const LabelSchema& schema) {
    std::map<PostKey, const AnnotationPrediction*> by_post;
    for (const auto& p : preds) by_post[{p.timeline_id, p.post_id}] = &p;

    Task1Report rep;
    // element x valence confusion over posts with gold evidence.
    std::map<std::string, std::map<std::string, ConfusionCounts>> elem_counts;
    std::map<LabelTriple, ConfusionCounts> sub_counts;
    std::vector<int> pred_adaptive, gold_adaptive, pred_maladaptive, gold_maladaptive;

    for (const auto& t : gold) {
        for (const auto& post : t.posts) {
            if (!post.gold_annotation) continue;  // only posts with annotated evidence
            const auto& ann = *post.gold_annotation;
            auto it = by_post.find({t.timeline_id, post.post_id});
            const std::set<LabelTriple> empty;
            const std::set<LabelTriple>& plabels = it != by_post.end() ? it->second->labels : empty;
            for (const auto& l : plabels)
                if (!schema.contains(l))
                    throw ValidationError("predicted label not in schema: " + l.element + "/" +
                                          l.valence + "/" + l.subelement);

            for (const auto& element : schema.elements()) {
                for (const char* valence : {kValenceAdaptive, kValenceMaladaptive}) {
                    auto has = [&](const std::set<LabelTriple>& labels) {
                        return std::any_of(labels.begin(), labels.end(), [&](const LabelTriple& l) {
                            return l.element == element && l.valence == valence;
                        });
                    };
                    const bool g = has(ann.labels), p = has(plabels);
                    auto& c = elem_counts[element][valence];
                    if (p && g) ++c.tp;
                    else if (p) ++c.fp;
                    else if (g) ++c.fn;

                    for (const auto& sub : schema.subelements(element)) {
                        const LabelTriple triple{element, valence, sub};
                        const bool gs = ann.labels.count(triple) > 0;
                        const bool ps = plabels.count(triple) > 0;
                        auto& sc = sub_counts[triple];
                        if (ps && gs) ++sc.tp;
                        else if (ps) ++sc.fp;
                        else if (gs) ++sc.fn;
                    }
                }
            }
            if (ann.adaptive_presence && it != by_post.end() && it->second->adaptive_presence) {
                pred_adaptive.push_back(*it->second->adaptive_presence);
                gold_adaptive.push_back(*ann.adaptive_presence);
            }
            if (ann.maladaptive_presence && it != by_post.end() &&
                it->second->maladaptive_presence) {
                pred_maladaptive.push_back(*it->second->maladaptive_presence);
                gold_maladaptive.push_back(*ann.maladaptive_presence);
            }
        }
    }

    double adaptive_sum = 0, maladaptive_sum = 0;
    for (const auto& element : schema.elements()) {
        const Prf a = prf1(elem_counts[element][kValenceAdaptive]);
        const Prf m = prf1(elem_counts[element][kValenceMaladaptive]);
        rep.element_prf[element][kValenceAdaptive] = a;
        rep.element_prf[element][kValenceMaladaptive] = m;
        adaptive_sum += a.f1;
        maladaptive_sum += m.f1;

        double sub_sum = 0;
        std::size_t n_sub = 0;
        for (const char* valence : {kValenceAdaptive, kValenceMaladaptive})
            for (const auto& sub : schema.subelements(element)) {
                sub_sum += prf1(sub_counts[{element, valence, sub}]).f1;
                ++n_sub;
            }
        rep.subelement_macro_f1[element] = n_sub > 0 ? sub_sum / n_sub : 0.0;
    }
    const double n_elem = static_cast<double>(schema.elements().size());
    rep.adaptive_macro_f1 = adaptive_sum / n_elem;
    rep.maladaptive_macro_f1 = maladaptive_sum / n_elem;
    rep.final_f1 = (rep.adaptive_macro_f1 + rep.maladaptive_macro_f1) / 2.0;
    double sub_avg = 0;
    for (const auto& [el, v] : rep.subelement_macro_f1) sub_avg += v;
    rep.subelement_avg_macro_f1 = sub_avg / n_elem;

    if (pred_adaptive.size() >= 2)
        rep.presence[kValenceAdaptive] = presence_metrics(pred_adaptive, gold_adaptive);
    if (pred_maladaptive.size() >= 2)
        rep.presence[kValenceMaladaptive] = presence_metrics(pred_maladaptive, gold_maladaptive);
    rep.ranking_score =
        (rep.presence[kValenceAdaptive].rmse + rep.presence[kValenceMaladaptive].rmse) / 2.0;
    return rep;
}

Task2Report task2_report(std::span<const ChangePredictionRecord> preds,
                         std::span<const Timeline> gold) {
    std::map<PostKey, const ChangePredictionRecord*> by_post;
    for (const auto& p : preds) by_post[{p.timeline_id, p.post_id}] = &p;

    std::vector<std::string> missing;
    std::map<std::string, ConfusionCounts> pooled;  // all posts, pooled counts
    std::map<std::string, std::vector<double>> per_timeline_f1;

    for (const auto& t : gold) {
        std::map<std::string, ConfusionCounts> local;
        for (const auto& post : t.posts) {
            auto it = by_post.find({t.timeline_id, post.post_id});
            if (it == by_post.end()) {
                missing.push_back(t.timeline_id + "/" + post.post_id);
                continue;
            }
            const bool gs = post.gold_change && post.gold_change->switch_flag;
            const bool ge = post.gold_change && post.gold_change->escalation;
            const bool ps = it->second->switch_flag;
            const bool pe = it->second->escalation;
            auto tally = [](ConfusionCounts& c, bool p, bool g) {
                if (p && g) ++c.tp;
                else if (p) ++c.fp;
                else if (g) ++c.fn;
            };
            tally(pooled["switch"], ps, gs);
            tally(pooled["escalation"], pe, ge);
            tally(local["switch"], ps, gs);
            tally(local["escalation"], pe, ge);
        }
        for (const char* label : {"switch", "escalation"})
            per_timeline_f1[label].push_back(prf1(local[label]).f1);
    }
    if (!missing.empty()) {
        std::string msg = "missing change predictions for " + std::to_string(missing.size()) +
                          " post(s):";
        for (const auto& id : missing) msg += " " + id;
        throw ValidationError(msg);
    }

    Task2Report rep;
    for (const char* label : {"switch", "escalation"}) {
        rep.post_level[label] = prf1(pooled[label]);
        double sum = 0;
        for (double f : per_timeline_f1[label]) sum += f;
        rep.timeline_level_f1[label] =
            per_timeline_f1[label].empty() ? 0.0 : sum / per_timeline_f1[label].size();
    }
    rep.post_macro_f1 = (rep.post_level["switch"].f1 + rep.post_level["escalation"].f1) / 2.0;
    rep.timeline_macro_f1 =
        (rep.timeline_level_f1["switch"] + rep.timeline_level_f1["escalation"]) / 2.0;
    rep.final_f1 = (rep.post_macro_f1 + rep.timeline_macro_f1) / 2.0;
    return rep;
}

double rouge_l_recall(std::string_view candidate, std::string_view reference) {
    auto split = [](std::string_view s) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!cur.empty()) out.push_back(std::move(cur));
        return out;
    };
    const auto ref = split(reference);
    if (ref.empty()) throw ValidationError("rouge_l_recall: empty reference");
    const auto cand = split(candidate);

    // LCS over full token sequences, two-row DP.
    std::vector<std::size_t> prev(ref.size() + 1, 0), cur(ref.size() + 1, 0);
    for (std::size_t i = 1; i <= cand.size(); ++i) {
        for (std::size_t j = 1; j <= ref.size(); ++j) {
            cur[j] = cand[i - 1] == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
        std::fill(cur.begin(), cur.end(), 0);
    }
    return static_cast<double>(prev[ref.size()]) / static_cast<double>(ref.size());
}

RankAverageResult rank_average(const std::vector<std::vector<double>>& scores,
                               const std::vector<bool>& higher_is_better) {
    const std::size_t n_systems = scores.size();
    if (n_systems == 0) return {};
    const std::size_t n_metrics = higher_is_better.size();
    for (const auto& row : scores)
        if (row.size() != n_metrics)
            throw ValidationError("rank_average: each system needs one score per metric");

    auto competition_rank = [](const std::vector<double>& values, bool higher) {
        std::vector<int> ranks(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            int better = 0;
            for (std::size_t j = 0; j < values.size(); ++j)
                if (higher ? values[j] > values[i] : values[j] < values[i]) ++better;
            ranks[i] = better + 1;  // ties share the minimum rank
        }
        return ranks;
    };

    RankAverageResult out;
    out.avg_rank.assign(n_systems, 0.0);
    for (std::size_t m = 0; m < n_metrics; ++m) {
        std::vector<double> col(n_systems);
        for (std::size_t s = 0; s < n_systems; ++s) col[s] = scores[s][m];
        out.metric_ranks.push_back(competition_rank(col, higher_is_better[m]));
        for (std::size_t s = 0; s < n_systems; ++s)
            out.avg_rank[s] += static_cast<double>(out.metric_ranks.back()[s]);
    }
    for (auto& a : out.avg_rank) a /= static_cast<double>(n_metrics);
    out.final_rank = competition_rank(out.avg_rank, /*higher=*/false);
    return out;
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    // Continued fraction (modified Lentz), with the symmetry transform for
    // convergence.
    auto betacf = [](double a, double b, double x) {
        constexpr int kMaxIter = 300;
        constexpr double kEps = 3e-14, kFpMin = 1e-300;
        const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
        double c = 1.0, d = 1.0 - qab * x / qap;
        if (std::abs(d) < kFpMin) d = kFpMin;
        d = 1.0 / d;
        double h = d;
        for (int m = 1; m <= kMaxIter; ++m) {
            const int m2 = 2 * m;
            double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
            d = 1.0 + aa * d;
            if (std::abs(d) < kFpMin) d = kFpMin;
            c = 1.0 + aa / c;
            if (std::abs(c) < kFpMin) c = kFpMin;
            d = 1.0 / d;
            h *= d * c;
            aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
            d = 1.0 + aa * d;
            if (std::abs(d) < kFpMin) d = kFpMin;
            c = 1.0 + aa / c;
            if (std::abs(c) < kFpMin) c = kFpMin;
            d = 1.0 / d;
            const double del = d * c;
            h *= del;
            if (std::abs(del - 1.0) < kEps) break;
        }
        return h;
    };
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    if (x < (a + 1.0) / (a + b + 2.0))
        return std::exp(ln_front) * betacf(a, b, x) / a;
    return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          b * std::log(1.0 - x) + a * std::log(x)) *
                     betacf(b, a, 1.0 - x) / b;
}

CorrelationResult pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw ValidationError("correlation length mismatch");
    if (xs.size() < 3) throw ValidationError("correlation requires >= 3 samples");
    CorrelationResult out;
    out.r = pearson_r(xs, ys);
    const double df = static_cast<double>(xs.size()) - 2.0;
    if (std::abs(out.r) >= 1.0) {
        out.p = 0.0;
    } else {
        const double t2 = out.r * out.r * df / (1.0 - out.r * out.r);
        out.p = incomplete_beta(df / 2.0, 0.5, df / (df + t2));
    }
    return out;
}

std::vector<std::vector<std::string>> kfold_split(std::span<const std::string> ids, int k,
                                                  std::uint64_t seed) {
    if (k < 2 || static_cast<std::size_t>(k) > ids.size())
        throw RangeError("kfold: k must satisfy 2 <= k <= number of ids");
    std::vector<std::string> shuffled(ids.begin(), ids.end());
    std::mt19937_64 rng(seed);
    // Explicit Fisher-Yates for cross-platform determinism.
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(shuffled[i], shuffled[j]);
    }
    const std::size_t n = shuffled.size(), kk = static_cast<std::size_t>(k);
    const std::size_t base = n / kk, extra = n % kk;
    std::vector<std::vector<std::string>> folds;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < kk; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        folds.emplace_back(shuffled.begin() + pos, shuffled.begin() + pos + size);
        pos += size;
    }
    return folds;
}

json Task1Report::to_json() const {
    json jelem = json::object();
    for (const auto& [element, valences] : element_prf) {
        json jv = json::object();
        for (const auto& [valence, prf] : valences)
            jv[valence] = {{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}};
        jelem[element] = std::move(jv);
    }
    json jpres = json::object();
    for (const auto& [valence, m] : presence)
        jpres[valence] = {{"mae", m.mae}, {"rmse", m.rmse}, {"qwk", m.qwk}, {"spearman", m.spearman}};
    return json{{"element_prf", std::move(jelem)},
                {"adaptive_macro_f1", adaptive_macro_f1},
                {"maladaptive_macro_f1", maladaptive_macro_f1},
                {"final_f1", final_f1},
                {"subelement_macro_f1", subelement_macro_f1},
                {"subelement_avg_macro_f1", subelement_avg_macro_f1},
                {"presence", std::move(jpres)},
                {"ranking_score", ranking_score},
                {"conventions", "0/0 ratios reported as 0"}};
}

json Task2Report::to_json() const {
    json jpost = json::object();
    for (const auto& [label, prf] : post_level)
        jpost[label] = {{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}};
    return json{{"post_level", std::move(jpost)},
                {"timeline_level_f1", timeline_level_f1},
                {"post_macro_f1", post_macro_f1},
                {"timeline_macro_f1", timeline_macro_f1},
                {"final_f1", final_f1},
                {"conventions", "0/0 ratios reported as 0"}};
}

}  // namespace mindtrace

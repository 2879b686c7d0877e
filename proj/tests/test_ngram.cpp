#include <doctest.h>

#include <cmath>
#include <random>

#include "mindtrace/ngram.hpp"

using namespace mindtrace;

namespace {

double xlx(double x) { return x > 0 ? x * std::log(x) : 0.0; }

// Independent oracle: G^2 written through the entropy decomposition
// 2 * (sum k ln k - sum row ln row - sum col ln col + N ln N).
double llr_oracle(double k11, double k12, double k21, double k22) {
    const double n = k11 + k12 + k21 + k22;
    return 2.0 * (xlx(k11) + xlx(k12) + xlx(k21) + xlx(k22) - xlx(k11 + k12) - xlx(k21 + k22) -
                  xlx(k11 + k21) - xlx(k12 + k22) + xlx(n));
}

WordList stop() { return WordList({"the", "a", "and", "i"}); }

LabeledCorpus two_label_corpus() {
    LabeledCorpus c;
    LabelTriple anx{"affect", "maladaptive", "anxiety"};
    LabelTriple calm{"affect", "adaptive", "calm"};
    c.evidence[anx] = {"panic attack again today", "another panic attack at work",
                       "heart racing panic attack"};
    c.evidence[calm] = {"deep breathing helped me", "deep breathing before bed",
                        "felt calm after deep breathing"};
    return c;
}

}  // namespace

TEST_CASE("llr matches the entropy-form oracle on random tables") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> d(0, 500);
    for (int i = 0; i < 500; ++i) {
        double k11 = d(rng), k12 = d(rng), k21 = d(rng), k22 = d(rng);
        if (k11 + k12 + k21 + k22 == 0) k11 = 1;
        CHECK(llr_score(k11, k12, k21, k22) ==
              doctest::Approx(llr_oracle(k11, k12, k21, k22)).epsilon(1e-9));
    }
}

TEST_CASE("llr invariances") {
    CHECK(llr_score(10, 3, 7, 80) == doctest::Approx(llr_score(7, 80, 10, 3)));   // row swap
    CHECK(llr_score(10, 3, 7, 80) == doctest::Approx(llr_score(3, 10, 80, 7)));   // column swap
    // Independence: k11/k12 = k21/k22 gives (near) zero.
    CHECK(llr_score(20, 40, 10, 20) == doctest::Approx(0.0).epsilon(1e-12));
    // Scaling all counts by c scales the statistic by c.
    const double g = llr_score(12, 5, 9, 44);
    CHECK(llr_score(36, 15, 27, 132) == doctest::Approx(3 * g));
}

TEST_CASE("llr rejects bad tables") {
    CHECK_THROWS_AS(llr_score(-1, 2, 3, 4), RangeError);
    CHECK_THROWS_AS(llr_score(0, 0, 0, 0), RangeError);
}

TEST_CASE("clean_tokens removes stopwords after tokenizing") {
    CHECK(clean_tokens("The panic AND the fear", stop()) ==
          std::vector<std::string>{"panic", "fear"});
}

TEST_CASE("signatures favour label-discriminative ngrams") {
    auto sigs = extract_signatures(two_label_corpus(), stop(), {});
    LabelTriple anx{"affect", "maladaptive", "anxiety"};
    LabelTriple calm{"affect", "adaptive", "calm"};
    REQUIRE(sigs.signatures.count(anx) == 1);
    REQUIRE(sigs.signatures.count(calm) == 1);
    CHECK(sigs.warnings.empty());

    CHECK(sigs.signatures.at(anx).front().ngram == Ngram{"panic", "attack"});
    CHECK(sigs.signatures.at(calm).front().ngram == Ngram{"deep", "breathing"});
    // Sorted by score descending.
    const auto& list = sigs.signatures.at(anx);
    for (std::size_t i = 1; i < list.size(); ++i) CHECK(list[i - 1].llr >= list[i].llr);
}

TEST_CASE("k truncation and empty-label warning") {
    TaggerConfig cfg;
    cfg.k = 2;
    auto corpus = two_label_corpus();
    corpus.evidence[{"behavior", "adaptive", "self_care"}] = {"the a and i"};  // all stopwords
    auto sigs = extract_signatures(corpus, stop(), cfg);
    for (const auto& [label, list] : sigs.signatures) CHECK(list.size() <= 2);
    CHECK(sigs.signatures.count({"behavior", "adaptive", "self_care"}) == 0);
    REQUIRE(sigs.warnings.size() == 1);
    CHECK(sigs.warnings[0].find("behavior|adaptive|self_care") != std::string::npos);
}

TEST_CASE("tag_post assigns labels whose signatures appear") {
    auto sigs = extract_signatures(two_label_corpus(), stop(), {});
    Post p{"p", 0, "had a panic attack on the train", {}, {}, {}};
    auto labels = tag_post(p, sigs, stop(), {});
    CHECK(labels.count({"affect", "maladaptive", "anxiety"}) == 1);
    CHECK(labels.count({"affect", "adaptive", "calm"}) == 0);

    Post blank{"q", 1, "nothing relevant here", {}, {}, {}};
    CHECK(tag_post(blank, sigs, stop(), {}).empty());
}

TEST_CASE("min_match raises the assignment bar") {
    auto sigs = extract_signatures(two_label_corpus(), stop(), {});
    Post p{"p", 0, "panic attack", {}, {}, {}};
    TaggerConfig strict;
    strict.min_match = 3;
    CHECK(tag_post(p, sigs, stop(), strict).empty());
}

TEST_CASE("signature set round-trips through json") {
    auto sigs = extract_signatures(two_label_corpus(), stop(), {});
    auto restored = SignatureSet::from_json(sigs.to_json());
    REQUIRE(restored.signatures.size() == sigs.signatures.size());
    for (const auto& [label, list] : sigs.signatures) {
        REQUIRE(restored.signatures.count(label) == 1);
        CHECK(restored.signatures.at(label) == list);
    }
}

TEST_CASE("corpus_from_timelines keys evidence by gold labels") {
    Timeline t;
    t.timeline_id = "t";
    Post p{"a", 0, "panic attack text", {}, PostAnnotation{}, {}};
    p.gold_annotation->labels.insert({"affect", "maladaptive", "anxiety"});
    Post unlabeled{"b", 1, "plain", {}, {}, {}};
    t.posts = {p, unlabeled};
    auto corpus = corpus_from_timelines(std::span<const Timeline>(&t, 1));
    REQUIRE(corpus.evidence.size() == 1);
    CHECK(corpus.evidence.begin()->second == std::vector<std::string>{"panic attack text"});
}

#include <doctest.h>

#include <vector>

#include "diffudec/decoding.hpp"

using namespace diffudec;

namespace {

std::vector<Prediction> preds(const std::vector<double>& confidences) {
    std::vector<Prediction> v;
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        v.push_back(Prediction{i, static_cast<TokenId>(i), confidences[i], 0.0});
    }
    return v;
}

bool same_trace(const Trace& a, const Trace& b) {
    if (a.hypothesis != b.hypothesis) return false;
    if (a.model_calls != b.model_calls) return false;
    if (a.events.size() != b.events.size()) return false;
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        const CommitEvent& x = a.events[i];
        const CommitEvent& y = b.events[i];
        if (x.round != y.round || x.block != y.block || x.commits.size() != y.commits.size())
            return false;
        for (std::size_t j = 0; j < x.commits.size(); ++j) {
            if (x.commits[j].position != y.commits[j].position) return false;
            if (x.commits[j].token != y.commits[j].token) return false;
            if (x.commits[j].confidence != y.commits[j].confidence) return false;  // bit-exact
            if (x.commits[j].nll != y.commits[j].nll) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("fixed-k keeps the k most confident, ties to the lower position") {
    auto c = preds({0.5, 0.9, 0.7});
    auto r = select_fixed_k(c, 2);
    CHECK(r.chosen == std::vector<std::size_t>{1, 2});
    CHECK_FALSE(r.used_fallback);

    auto all = select_fixed_k(c, 10);  // k larger than the candidate set
    CHECK(all.chosen == std::vector<std::size_t>{0, 1, 2});

    auto tied = select_fixed_k(preds({0.8, 0.8, 0.8}), 2);
    CHECK(tied.chosen == std::vector<std::size_t>{0, 1});
}

TEST_CASE("static threshold is strict and falls back to the single best") {
    auto r = select_static(preds({0.99, 0.96, 0.70}), 0.95);
    CHECK(r.chosen == std::vector<std::size_t>{0, 1});
    CHECK_FALSE(r.used_fallback);

    auto fb = select_static(preds({0.5, 0.4}), 0.9);
    CHECK(fb.chosen == std::vector<std::size_t>{0});
    CHECK(fb.used_fallback);

    // equality does not qualify
    auto eq = select_static(preds({0.9}), 0.9);
    CHECK(eq.chosen == std::vector<std::size_t>{0});
    CHECK(eq.used_fallback);

    auto tie_fb = select_static(preds({0.5, 0.5}), 0.9);
    CHECK(tie_fb.chosen == std::vector<std::size_t>{0});
}

TEST_CASE("dynamic threshold picks the largest satisfying count") {
    // sorted confidences 0.99, 0.97, 0.80, 0.50:
    // (k+1)(1-c(k)) = 0.02, 0.09, 0.80, 2.50
    auto r = select_dynamic(preds({0.99, 0.97, 0.80, 0.50}), 0.2);
    CHECK(r.chosen == std::vector<std::size_t>{0, 1});
    CHECK_FALSE(r.used_fallback);

    auto wide = select_dynamic(preds({0.99, 0.97, 0.80, 0.50}), 10.0);
    CHECK(wide.chosen == std::vector<std::size_t>{0, 1, 2, 3});

    auto fb = select_dynamic(preds({0.4}), 0.5);  // 2 * 0.6 = 1.2 misses the bound
    CHECK(fb.chosen == std::vector<std::size_t>{0});
    CHECK(fb.used_fallback);
}

TEST_CASE("dynamic threshold sorts by confidence, not position") {
    // candidate order scrambled; top two by confidence sit at positions 2, 0
    std::vector<Prediction> c = {
        Prediction{0, 0, 0.97, 0.0},
        Prediction{1, 0, 0.50, 0.0},
        Prediction{2, 0, 0.99, 0.0},
    };
    auto r = select_dynamic(c, 0.2);
    CHECK(r.chosen == std::vector<std::size_t>{0, 2});
}

TEST_CASE("select dispatches on the strategy variant") {
    auto c = preds({0.99, 0.5});
    CHECK(select(c, FixedK{1}).chosen == std::vector<std::size_t>{0});
    CHECK(select(c, StaticThreshold{0.9}).chosen == std::vector<std::size_t>{0});
    CHECK(select(c, DynamicThreshold{0.2}).chosen == std::vector<std::size_t>{0});
}

TEST_CASE("fixed-k decodes a full block in ceil(B/k) rounds") {
    CorpusConfig cfg;
    cfg.num_utterances = 3;
    cfg.min_len = 32;
    cfg.max_len = 32;
    cfg.vocab_size = 16;
    cfg.seed = 3;
    Corpus corpus = generate_corpus(cfg);
    auto den = corpus.make_denoiser();
    Trace t = decode_utterance(corpus.utterances[0], *den, FixedK{8}, 32);
    CHECK(t.events.size() == 4);
    for (const auto& e : t.events) CHECK(e.commits.size() == 8);
    CHECK(trace_complete(t));
}

TEST_CASE("decode traces satisfy the structural invariants") {
    CorpusConfig cfg;
    cfg.num_utterances = 6;
    cfg.min_len = 9;
    cfg.max_len = 21;
    cfg.vocab_size = 8;
    cfg.seed = 21;
    Corpus corpus = generate_corpus(cfg);
    auto den = corpus.make_denoiser();
    std::vector<StrategyConfig> strategies = {FixedK{3}, StaticThreshold{0.9},
                                              DynamicThreshold{0.2}};
    for (const auto& utt : corpus.utterances) {
        for (const auto& strategy : strategies) {
            Trace t = decode_utterance(utt, *den, strategy, 4);
            CHECK(trace_complete(t));
            CHECK(t.hypothesis.size() == utt.length());
            CHECK(t.model_calls == t.events.size());
            // blocks are decoded in order
            for (std::size_t i = 1; i < t.events.size(); ++i) {
                CHECK(t.events[i].block >= t.events[i - 1].block);
            }
        }
    }
}

TEST_CASE("the reference decoder commits left to right, one token per round") {
    CorpusConfig cfg;
    cfg.num_utterances = 2;
    cfg.min_len = 7;
    cfg.max_len = 7;
    cfg.vocab_size = 8;
    cfg.seed = 5;
    Corpus corpus = generate_corpus(cfg);
    auto den = corpus.make_denoiser();
    Trace t = decode_ar(corpus.utterances[0], *den);
    REQUIRE(t.events.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(t.events[i].round == i + 1);
        CHECK(t.events[i].block == i);
        REQUIRE(t.events[i].commits.size() == 1);
        CHECK(t.events[i].commits[0].position == i);
    }
    CHECK(trace_complete(t));
}

TEST_CASE("block size one collapses every strategy onto the reference decoder") {
    CorpusConfig cfg;
    cfg.num_utterances = 8;
    cfg.min_len = 4;
    cfg.max_len = 18;
    cfg.vocab_size = 12;
    cfg.seed = 17;
    Corpus corpus = generate_corpus(cfg);
    auto den = corpus.make_denoiser();
    std::vector<StrategyConfig> strategies = {FixedK{1}, FixedK{5}, StaticThreshold{0.99},
                                              DynamicThreshold{0.05}};
    for (const auto& utt : corpus.utterances) {
        Trace ar = decode_ar(utt, *den);
        for (const auto& strategy : strategies) {
            CHECK(same_trace(ar, decode_utterance(utt, *den, strategy, 1)));
        }
    }
}

TEST_CASE("first-pass confidences come from a fully masked single block") {
    Corpus corpus = generate_corpus(skewed_profile_corpus());
    auto den = corpus.make_denoiser();
    const Utterance& utt = corpus.utterances[0];
    auto confs = first_pass_confidences(utt, *den);
    REQUIRE(confs.size() == utt.length());
    DecodeState state(utt.length(), utt.length());
    for (std::size_t p = 0; p < utt.length(); ++p) {
        CHECK(confs[p] == den->predict(utt, state, p).confidence);
    }
}

TEST_CASE("decoding validates its inputs") {
    CorpusConfig cfg;
    cfg.num_utterances = 1;
    cfg.min_len = 4;
    cfg.max_len = 4;
    cfg.vocab_size = 4;
    Corpus corpus = generate_corpus(cfg);
    auto den = corpus.make_denoiser();
    CHECK_THROWS_AS(decode_utterance(corpus.utterances[0], *den, FixedK{0}, 4),
                    std::invalid_argument);
    CHECK_THROWS_AS(decode_utterance(corpus.utterances[0], *den, FixedK{1}, 0),
                    std::invalid_argument);
    Utterance empty{"e", {}, {}, 1.0};
    CHECK_THROWS_AS(decode_utterance(empty, *den, FixedK{1}, 4), std::invalid_argument);
}

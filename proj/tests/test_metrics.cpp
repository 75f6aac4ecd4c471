#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "diffudec/decoding.hpp"
#include "diffudec/metrics.hpp"

using namespace diffudec;

namespace {

// full-matrix edit distance, deliberately independent of the two-row version
std::size_t edit_distance_oracle(const std::vector<TokenId>& a, const std::vector<TokenId>& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
        }
    }
    return d[a.size()][b.size()];
}

Trace two_token_trace() {
    Trace t;
    t.utterance_id = "u";
    CommitEvent e1{1, 0, {Prediction{0, 1, 0.5, std::log(2.0)}}};
    CommitEvent e2{2, 0, {Prediction{1, 2, 0.25, std::log(4.0)}}};
    t.events = {e1, e2};
    t.model_calls = 2;
    t.hypothesis = {1, 2};
    return t;
}

}  // namespace

TEST_CASE("wer counts edit operations over the reference length") {
    std::vector<TokenId> ref = {1, 2, 3};
    std::vector<TokenId> sub = {1, 9, 3};
    CHECK(wer(ref, sub) == doctest::Approx(1.0 / 3.0));
    CHECK(wer(ref, ref) == 0.0);

    std::vector<TokenId> one = {1};
    std::vector<TokenId> none = {};
    CHECK(wer(one, none) == 1.0);

    // insertions can push the rate past 1
    std::vector<TokenId> three = {1, 5, 6};
    CHECK(wer(one, three) == 2.0);

    CHECK_THROWS_AS(wer(none, one), std::invalid_argument);
}

TEST_CASE("wer agrees with a full-matrix oracle on random pairs") {
    std::mt19937_64 eng(31);
    std::uniform_int_distribution<int> len(0, 9);
    std::uniform_int_distribution<int> tok(0, 2);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<TokenId> ref(static_cast<std::size_t>(len(eng)) + 1);
        std::vector<TokenId> hyp(static_cast<std::size_t>(len(eng)));
        for (auto& t : ref) t = tok(eng);
        for (auto& t : hyp) t = tok(eng);
        double expected =
            static_cast<double>(edit_distance_oracle(ref, hyp)) / static_cast<double>(ref.size());
        CHECK(wer(ref, hyp) == expected);
    }
}

TEST_CASE("rtf proxy scales model calls by the cost model") {
    Trace t;
    t.model_calls = 6;
    CHECK(rtf_proxy(t, CostModel{0.05}, 10.0) == doctest::Approx(0.03).epsilon(1e-15));
    t.model_calls = 0;
    CHECK(rtf_proxy(t, CostModel{0.05}, 10.0) == 0.0);
    t.model_calls = 1;
    CHECK_THROWS_AS(rtf_proxy(t, CostModel{0.0}, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(rtf_proxy(t, CostModel{0.05}, 0.0), std::invalid_argument);
}

TEST_CASE("trajectory accumulates committed NLL against progress") {
    auto points = trajectory(two_token_trace(), 2);
    REQUIRE(points.size() == 3);
    CHECK(points[0].progress == 0.0);
    CHECK(points[0].cum_nll == 0.0);
    CHECK(points[1].progress == doctest::Approx(0.5));
    CHECK(points[1].cum_nll == doctest::Approx(0.6931471805599453).epsilon(1e-14));
    CHECK(points[2].progress == doctest::Approx(1.0));
    CHECK(points[2].cum_nll == doctest::Approx(2.0794415416798357).epsilon(1e-14));
}

TEST_CASE("trajectory ignores rounds that only commit past the horizon") {
    Trace t;
    t.utterance_id = "u";
    t.events = {
        CommitEvent{1, 0, {Prediction{0, 1, 0.5, 0.7}}},
        CommitEvent{2, 1, {Prediction{2, 1, 0.5, 0.9}}},  // beyond horizon 2
        CommitEvent{3, 0, {Prediction{1, 1, 0.5, 0.4}}},
    };
    // fix up block/round bookkeeping so the trace is structurally complete
    t.events[1].block = 1;
    t.events[2].block = 0;
    t.model_calls = 3;
    t.hypothesis = {1, 1, 1};
    auto points = trajectory(t, 2);
    REQUIRE(points.size() == 3);
    CHECK(points[1].progress == doctest::Approx(0.5));
    CHECK(points[2].progress == doctest::Approx(1.0));
    CHECK(points[2].cum_nll == doctest::Approx(1.1));
    for (std::size_t i = 1; i < points.size(); ++i) {
        CHECK(points[i].progress > points[i - 1].progress);
        CHECK(points[i].cum_nll >= points[i - 1].cum_nll);
    }
    CHECK_THROWS_AS(trajectory(t, 0), std::invalid_argument);
    t.events.pop_back();
    CHECK_THROWS_AS(trajectory(t, 2), std::invalid_argument);  // incomplete trace
}

TEST_CASE("ar trajectory is the trajectory of the reference decode") {
    CorpusConfig cfg;
    cfg.num_utterances = 4;
    cfg.min_len = 6;
    cfg.max_len = 14;
    cfg.vocab_size = 8;
    cfg.seed = 13;
    Corpus corpus = generate_corpus(cfg);
    auto den = corpus.make_denoiser();
    for (const auto& utt : corpus.utterances) {
        auto direct = ar_trajectory(utt, *den, 8);
        auto composed = trajectory(decode_ar(utt, *den), 8);
        REQUIRE(direct.size() == composed.size());
        for (std::size_t i = 0; i < direct.size(); ++i) {
            CHECK(direct[i].progress == doctest::Approx(composed[i].progress).epsilon(1e-12));
            CHECK(direct[i].cum_nll == doctest::Approx(composed[i].cum_nll).epsilon(1e-12));
        }
    }
}

TEST_CASE("throughput lists per-round commit counts") {
    Trace t = two_token_trace();
    Throughput th = throughput(t);
    CHECK(th.per_round == std::vector<std::size_t>{1, 1});
    CHECK(th.stopping_round == 2);
}

TEST_CASE("ccdf fractions are inclusive at the threshold") {
    std::vector<double> samples = {0.1, 0.5, 0.9, 0.9};
    std::vector<double> thresholds = {0.0, 0.5, 0.9, 0.95};
    auto f = ccdf(samples, thresholds);
    CHECK(f == std::vector<double>{1.0, 0.75, 0.5, 0.0});
    CHECK_THROWS_AS(ccdf(std::vector<double>{}, thresholds), std::invalid_argument);
}

TEST_CASE("beta ccdf matches closed forms") {
    // alpha = 1: survival is (1 - s)^beta
    for (double s : {0.1, 0.5, 0.9}) {
        CHECK(beta_ccdf(1.0, 2.5, s) == doctest::Approx(std::pow(1.0 - s, 2.5)).epsilon(1e-10));
        CHECK(beta_ccdf(3.0, 1.0, s) == doctest::Approx(1.0 - std::pow(s, 3.0)).epsilon(1e-10));
        CHECK(beta_ccdf(1.0, 1.0, s) == doctest::Approx(1.0 - s).epsilon(1e-12));
    }
    CHECK(beta_ccdf(2.0, 2.0, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(beta_ccdf(2.0, 2.0, 0.0) == 1.0);
    CHECK(beta_ccdf(2.0, 2.0, 1.0) == 0.0);
    CHECK_THROWS_AS(beta_ccdf(0.0, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("beta ccdf matches direct quadrature for the preset shapes") {
    // Simpson integration of the density over [0, s]; the integrand is smooth
    // away from x = 1, so integrating the CDF side avoids the endpoint
    // singularity when beta < 1.
    auto quad_ccdf = [](double a, double b, double s) {
        const int n = 40000;  // even
        double h = s / n;
        auto f = [&](double x) {
            if (x <= 0.0) return a > 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
            return std::pow(x, a - 1.0) * std::pow(1.0 - x, b - 1.0);
        };
        double acc = f(1e-300) * 0 + f(s);
        for (int i = 1; i < n; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
        double integral = acc * h / 3.0;
        double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
        return 1.0 - integral / std::exp(log_beta);
    };
    for (double s : {0.5, 0.8, 0.9, 0.95}) {
        CHECK(beta_ccdf(1.8457172, 0.0431432, s) ==
              doctest::Approx(quad_ccdf(1.8457172, 0.0431432, s)).epsilon(1e-6));
        CHECK(beta_ccdf(2.5313340, 0.4029887, s) ==
              doctest::Approx(quad_ccdf(2.5313340, 0.4029887, s)).epsilon(1e-6));
    }
}

namespace {

TradeoffPoint tp(double w, double r) { return TradeoffPoint{"s", "p", 1, w, r, 1.0}; }

std::vector<TradeoffPoint> pareto_oracle(const std::vector<TradeoffPoint>& pts) {
    std::vector<TradeoffPoint> keep;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
            bool better_or_equal = pts[j].wer <= pts[i].wer && pts[j].rtf <= pts[i].rtf;
            bool strictly = pts[j].wer < pts[i].wer || pts[j].rtf < pts[i].rtf;
            dominated = better_or_equal && strictly;
        }
        if (!dominated) keep.push_back(pts[i]);
    }
    std::stable_sort(keep.begin(), keep.end(),
                     [](const TradeoffPoint& a, const TradeoffPoint& b) { return a.rtf < b.rtf; });
    return keep;
}

}  // namespace

TEST_CASE("pareto keeps the non-dominated points in rtf order") {
    std::vector<TradeoffPoint> pts = {tp(0.3, 0.01), tp(0.2, 0.05), tp(0.25, 0.07),
                                      tp(0.1, 0.10), tp(0.1, 0.12)};
    auto front = pareto(pts);
    REQUIRE(front.size() == 3);
    CHECK(front[0].rtf == 0.01);
    CHECK(front[1].rtf == 0.05);
    CHECK(front[2].rtf == 0.10);

    // duplicates survive together
    std::vector<TradeoffPoint> dup = {tp(0.2, 0.05), tp(0.2, 0.05)};
    CHECK(pareto(dup).size() == 2);
}

TEST_CASE("pareto agrees with a quadratic oracle on random sets") {
    std::mt19937_64 eng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> coarse(0, 4);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<TradeoffPoint> pts;
        for (int i = 0; i < 100; ++i) {
            // coarse grid half the time so equal coordinates actually occur
            double w = (trial % 2) ? coarse(eng) * 0.1 : u(eng);
            double r = (trial % 2) ? coarse(eng) * 0.1 : u(eng);
            pts.push_back(tp(w, r));
        }
        auto got = pareto(pts);
        auto expected = pareto_oracle(pts);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].wer == expected[i].wer);
            CHECK(got[i].rtf == expected[i].rtf);
        }
    }
}

TEST_CASE("match_rtf picks the closest point per group, ties to lower wer") {
    std::vector<std::vector<TradeoffPoint>> groups;
    groups.push_back({tp(0.1, 0.05), tp(0.05, 0.10)});
    groups.push_back({tp(0.1, 0.06), tp(0.05, 0.08)});
    auto m = match_rtf(groups, 0.07);
    REQUIRE(m.size() == 2);
    CHECK(m[0].rtf == 0.05);  // distance 0.02 beats 0.03
    CHECK(m[1].wer == 0.05);  // equal distance, lower wer wins
    groups.push_back({});
    CHECK_THROWS_AS(match_rtf(groups, 0.07), std::invalid_argument);
}

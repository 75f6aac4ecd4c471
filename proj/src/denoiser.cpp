#include "diffudec/denoiser.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "diffudec/rng.hpp"

namespace diffudec {

bool is_normalized(const Distribution& d, double tol) {
    double total = 0.0;
    for (double x : d.p) {
        if (x < 0.0 || !std::isfinite(x)) return false;
        total += x;
    }
    return std::abs(total - 1.0) <= tol;
}

Prediction to_prediction(const Distribution& d, std::size_t position) {
    if (d.p.empty()) throw std::invalid_argument("empty distribution");
    std::size_t best = 0;
    for (std::size_t i = 1; i < d.p.size(); ++i) {
        if (d.p[i] > d.p[best]) best = i;
    }
    double conf = d.p[best];
    double nll = -std::log(conf);
    if (nll <= 0.0) nll = 0.0;
    return Prediction{position, static_cast<TokenId>(best), conf, nll};
}

void validate(const NoisyChannelConfig& cfg) {
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon < 1.0))
        throw std::invalid_argument("noisy channel epsilon must lie in [0, 1)");
    if (!(cfg.smoothing > 0.0)) throw std::invalid_argument("noisy channel smoothing must be > 0");
    std::size_t v = cfg.initial.size();
    if (v < 2) throw std::invalid_argument("noisy channel needs vocab size >= 2");
    if (cfg.transition.size() != v)
        throw std::invalid_argument("transition matrix must be square over the vocabulary");
    auto check_row = [](const std::vector<double>& row, std::size_t v, const char* what) {
        if (row.size() != v) throw std::invalid_argument(std::string(what) + " has wrong width");
        double total = 0.0;
        for (double x : row) {
            if (x < 0.0 || !std::isfinite(x))
                throw std::invalid_argument(std::string(what) + " has a negative entry");
            total += x;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument(std::string(what) + " does not sum to 1");
    };
    check_row(cfg.initial, v, "start distribution");
    for (const auto& row : cfg.transition) check_row(row, v, "transition row");
}

void validate(const ProfileConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.beta > 0.0))
        throw std::invalid_argument("profile alpha and beta must be > 0");
    if (!(cfg.context_gain >= 0.0)) throw std::invalid_argument("profile context gain must be >= 0");
}

NoisyChannelDenoiser::NoisyChannelDenoiser(NoisyChannelConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
}

namespace {

void require_masked(const Utterance& utt, const DecodeState& state, std::size_t position) {
    if (position >= state.length()) throw std::invalid_argument("position out of range");
    if (state.length() != utt.length())
        throw std::invalid_argument("decode state does not match the utterance length");
    if (state.cell(position).has_value())
        throw std::invalid_argument("posterior requested for a committed position");
}

}  // namespace

Distribution NoisyChannelDenoiser::posterior(const Utterance& utt, const DecodeState& state,
                                             std::size_t position) const {
    require_masked(utt, state, position);
    std::size_t v = cfg_.initial.size();
    std::size_t len = state.length();
    TokenId obs = utt.observations[position];
    double hit = 1.0 - cfg_.epsilon;
    double miss = cfg_.epsilon / static_cast<double>(v - 1);
    double uniform = 1.0 / static_cast<double>(v);

    // The start distribution permanently stands in for the missing left
    // neighbor of position 0.
    const std::vector<double>* left_row = nullptr;
    if (position == 0) {
        left_row = &cfg_.initial;
    } else if (const auto& cell = state.cell(position - 1); cell.has_value()) {
        left_row = &cfg_.transition[static_cast<std::size_t>(cell->token)];
    }
    const auto* right_cell =
        position + 1 < len && state.cell(position + 1).has_value() ? &*state.cell(position + 1) : nullptr;

    Distribution d;
    d.p.resize(v);
    double total = 0.0;
    for (std::size_t t = 0; t < v; ++t) {
        double acoustic = (static_cast<TokenId>(t) == obs) ? hit : miss;
        double left = left_row ? (*left_row)[t] : uniform;
        double right = right_cell ? cfg_.transition[t][static_cast<std::size_t>(right_cell->token)]
                                  : uniform;
        double mass = acoustic * left * right + cfg_.smoothing;
        d.p[t] = mass;
        total += mass;
    }
    for (auto& x : d.p) x /= total;
    return d;
}

ProfileDenoiser::ProfileDenoiser(ProfileConfig cfg, std::size_t vocab_size, std::uint64_t seed)
    : cfg_(cfg), vocab_size_(vocab_size), seed_(seed) {
    validate(cfg_);
    if (vocab_size_ < 2) throw std::invalid_argument("profile model needs vocab size >= 2");
}

Distribution ProfileDenoiser::posterior(const Utterance& utt, const DecodeState& state,
                                        std::size_t position) const {
    require_masked(utt, state, position);
    // Base confidence and the identity of the predicted token are keyed by
    // (seed, utterance, position) so they are stable across rounds; only the
    // committed-neighbor sharpening changes as decoding proceeds.
    auto eng = engine_for(seed_, utt.id, position);
    double c0 = beta_draw(eng, cfg_.alpha, cfg_.beta);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double u = u01(eng);

    TokenId ref = utt.reference[position];
    TokenId designated = ref;
    if (cfg_.calibrated && u >= c0) {
        designated = static_cast<TokenId>((static_cast<std::size_t>(ref) + 1) % vocab_size_);
    }

    int neighbors = 0;
    if (position > 0 && state.cell(position - 1).has_value()) ++neighbors;
    if (position + 1 < state.length() && state.cell(position + 1).has_value()) ++neighbors;
    double c = 1.0 - (1.0 - c0) * std::exp(-cfg_.context_gain * neighbors);

    Distribution d;
    d.p.assign(vocab_size_, (1.0 - c) / static_cast<double>(vocab_size_ - 1));
    d.p[static_cast<std::size_t>(designated)] = c;
    return d;
}

std::vector<std::vector<double>> build_transition(std::uint64_t seed, std::size_t vocab_size,
                                                  double concentration) {
    if (vocab_size < 2) throw std::invalid_argument("transition matrix needs vocab size >= 2");
    if (!(concentration > 0.0)) throw std::invalid_argument("concentration must be > 0");
    std::mt19937_64 eng(splitmix64(seed));
    std::vector<std::vector<double>> rows;
    rows.reserve(vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i) {
        rows.push_back(dirichlet_draw(eng, vocab_size, concentration));
    }
    return rows;
}

NoisyChannelConfig materialize_noisy_channel(const NoisyChannelParams& params,
                                             std::size_t vocab_size, std::uint64_t seed) {
    NoisyChannelConfig cfg;
    cfg.epsilon = params.epsilon;
    cfg.smoothing = params.smoothing;
    cfg.transition = build_transition(hash_key(seed, "transition"), vocab_size, params.concentration);
    cfg.initial.assign(vocab_size, 1.0 / static_cast<double>(vocab_size));
    return cfg;
}

std::unique_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec, std::size_t vocab_size,
                                        std::uint64_t seed) {
    if (const auto* nc = std::get_if<NoisyChannelParams>(&spec)) {
        return std::make_unique<NoisyChannelDenoiser>(materialize_noisy_channel(*nc, vocab_size, seed));
    }
    return std::make_unique<ProfileDenoiser>(std::get<ProfileConfig>(spec), vocab_size, seed);
}

void validate(const CorpusConfig& cfg) {
    if (cfg.vocab_size < 2) throw std::invalid_argument("corpus needs vocab size >= 2");
    if (cfg.num_utterances < 1) throw std::invalid_argument("corpus needs at least one utterance");
    if (cfg.min_len < 1 || cfg.min_len > cfg.max_len)
        throw std::invalid_argument("corpus needs 1 <= min_len <= max_len");
    if (!(cfg.token_duration_s > 0.0))
        throw std::invalid_argument("token duration must be > 0");
    if (const auto* nc = std::get_if<NoisyChannelParams>(&cfg.denoiser)) {
        if (!(nc->epsilon >= 0.0 && nc->epsilon < 1.0))
            throw std::invalid_argument("noisy channel epsilon must lie in [0, 1)");
        if (!(nc->concentration > 0.0)) throw std::invalid_argument("concentration must be > 0");
        if (!(nc->smoothing > 0.0)) throw std::invalid_argument("smoothing must be > 0");
    } else {
        validate(std::get<ProfileConfig>(cfg.denoiser));
    }
}

Corpus generate_corpus(const CorpusConfig& cfg) {
    validate(cfg);
    Corpus corpus{Vocabulary::synthetic(cfg.vocab_size), {}, cfg.denoiser, cfg.token_duration_s,
                  cfg.seed, cfg.name};

    const auto* nc = std::get_if<NoisyChannelParams>(&cfg.denoiser);
    NoisyChannelConfig channel;
    if (nc) channel = materialize_noisy_channel(*nc, cfg.vocab_size, cfg.seed);

    corpus.utterances.reserve(cfg.num_utterances);
    for (std::size_t n = 0; n < cfg.num_utterances; ++n) {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "utt_%05zu", n);
        Utterance utt;
        utt.id = buf;
        auto eng = engine_for(cfg.seed, utt.id);
        std::uniform_int_distribution<std::size_t> len_dist(cfg.min_len, cfg.max_len);
        std::size_t len = len_dist(eng);
        utt.reference.resize(len);
        utt.observations.resize(len);
        utt.duration_s = static_cast<double>(len) * cfg.token_duration_s;

        if (nc) {
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            for (std::size_t i = 0; i < len; ++i) {
                const auto& row = (i == 0)
                                      ? channel.initial
                                      : channel.transition[static_cast<std::size_t>(utt.reference[i - 1])];
                utt.reference[i] = static_cast<TokenId>(categorical_draw(eng, row));
            }
            for (std::size_t i = 0; i < len; ++i) {
                if (u01(eng) < channel.epsilon) {
                    std::uniform_int_distribution<std::size_t> other(0, cfg.vocab_size - 2);
                    std::size_t j = other(eng);
                    if (j >= static_cast<std::size_t>(utt.reference[i])) ++j;
                    utt.observations[i] = static_cast<TokenId>(j);
                } else {
                    utt.observations[i] = utt.reference[i];
                }
            }
        } else {
            std::uniform_int_distribution<std::size_t> tok(0, cfg.vocab_size - 1);
            for (std::size_t i = 0; i < len; ++i) {
                utt.reference[i] = static_cast<TokenId>(tok(eng));
                utt.observations[i] = utt.reference[i];
            }
        }
        corpus.utterances.push_back(std::move(utt));
    }
    return corpus;
}

ProfileConfig skewed_profile() {
    // Heavy mass near 1: about 93.7% of base confidences land at or above
    // 0.90 and 91.1% at or above 0.95.
    return ProfileConfig{1.8457172, 0.0431432, 1.0, true};
}

ProfileConfig dispersed_profile() {
    // Broad mid-range spread: about 59.1% at or above 0.90.
    return ProfileConfig{2.5313340, 0.4029887, 1.0, true};
}

CorpusConfig default_noisy_corpus() {
    CorpusConfig cfg;
    cfg.denoiser = NoisyChannelParams{};
    cfg.name = "noisy_channel";
    return cfg;
}

CorpusConfig skewed_profile_corpus() {
    CorpusConfig cfg;
    cfg.min_len = 32;
    cfg.denoiser = skewed_profile();
    cfg.name = "skewed";
    return cfg;
}

CorpusConfig dispersed_profile_corpus() {
    CorpusConfig cfg;
    cfg.min_len = 32;
    cfg.denoiser = dispersed_profile();
    cfg.name = "dispersed";
    return cfg;
}

}  // namespace diffudec

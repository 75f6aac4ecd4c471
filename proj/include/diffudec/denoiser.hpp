#pragma once

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "diffudec/core.hpp"

namespace diffudec {

struct Distribution {
    std::vector<double> p;
};

bool is_normalized(const Distribution& d, double tol = 1e-9);

// Argmax prediction; ties go to the lowest token index, nll = -ln(confidence).
Prediction to_prediction(const Distribution& d, std::size_t position);

// ---------------------------------------------------------------------------
// Posterior models

// Local Bayesian channel: acoustic likelihood of the observed token times
// bigram factors for the two neighbors.
struct NoisyChannelConfig {
    double epsilon = 0.2;                          // corruption probability, in [0, 1)
    std::vector<std::vector<double>> transition;   // row-stochastic, square
    std::vector<double> initial;                   // start distribution
    double smoothing = 1e-12;                      // additive floor, > 0
};

void validate(const NoisyChannelConfig& cfg);

// Confidence-profile model: every position gets a base confidence drawn from
// Beta(alpha, beta), sharpened multiplicatively toward 1 for each committed
// neighbor. The argmax correctness is tied to the base confidence when
// `calibrated` is set.
struct ProfileConfig {
    double alpha = 2.0;        // > 0
    double beta = 0.5;         // > 0
    double context_gain = 1.0; // >= 0
    bool calibrated = true;
};

void validate(const ProfileConfig& cfg);

// Compact serializable form of a noisy-channel setup. The full transition
// matrix and start distribution are derived deterministically from
// (corpus seed, vocab size, concentration).
struct NoisyChannelParams {
    double epsilon = 0.2;
    double concentration = 0.005;  // symmetric Dirichlet parameter for rows
    double smoothing = 1e-12;
};

using DenoiserSpec = std::variant<NoisyChannelParams, ProfileConfig>;

class Denoiser {
public:
    virtual ~Denoiser() = default;

    // Distribution over the vocabulary for a masked position. Pure function
    // of (utterance, committed-cell configuration, position).
    virtual Distribution posterior(const Utterance& utt, const DecodeState& state,
                                   std::size_t position) const = 0;

    virtual std::size_t vocab_size() const = 0;

    Prediction predict(const Utterance& utt, const DecodeState& state, std::size_t position) const {
        return to_prediction(posterior(utt, state, position), position);
    }
};

class NoisyChannelDenoiser final : public Denoiser {
public:
    explicit NoisyChannelDenoiser(NoisyChannelConfig cfg);

    Distribution posterior(const Utterance& utt, const DecodeState& state,
                           std::size_t position) const override;
    std::size_t vocab_size() const override { return cfg_.initial.size(); }
    const NoisyChannelConfig& config() const { return cfg_; }

private:
    NoisyChannelConfig cfg_;
};

class ProfileDenoiser final : public Denoiser {
public:
    ProfileDenoiser(ProfileConfig cfg, std::size_t vocab_size, std::uint64_t seed);

    Distribution posterior(const Utterance& utt, const DecodeState& state,
                           std::size_t position) const override;
    std::size_t vocab_size() const override { return vocab_size_; }
    const ProfileConfig& config() const { return cfg_; }

private:
    ProfileConfig cfg_;
    std::size_t vocab_size_;
    std::uint64_t seed_;
};

// Row-stochastic matrix whose rows are independent symmetric Dirichlet
// draws. Deterministic in (seed, vocab_size, concentration).
std::vector<std::vector<double>> build_transition(std::uint64_t seed, std::size_t vocab_size,
                                                  double concentration);

NoisyChannelConfig materialize_noisy_channel(const NoisyChannelParams& params,
                                             std::size_t vocab_size, std::uint64_t seed);

std::unique_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec, std::size_t vocab_size,
                                        std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic corpora

struct CorpusConfig {
    std::size_t num_utterances = 500;
    std::size_t min_len = 16;
    std::size_t max_len = 64;
    std::size_t vocab_size = 64;
    double token_duration_s = 0.3;
    std::uint64_t seed = 7;
    DenoiserSpec denoiser = NoisyChannelParams{};
    std::string name = "noisy_channel";  // label used in reports
};

void validate(const CorpusConfig& cfg);

struct Corpus {
    Vocabulary vocab;
    std::vector<Utterance> utterances;
    DenoiserSpec denoiser_spec;
    double token_duration_s = 0.3;
    std::uint64_t seed = 0;
    std::string name;

    std::unique_ptr<Denoiser> make_denoiser() const {
        return diffudec::make_denoiser(denoiser_spec, vocab.size(), seed);
    }
};

// Fully deterministic in the config. Noisy-channel corpora sample references
// from the bigram chain and corrupt each position independently with
// probability epsilon; profile corpora sample references uniformly and copy
// them into the observations (the profile model never reads observations).
Corpus generate_corpus(const CorpusConfig& cfg);

// ---------------------------------------------------------------------------
// Presets

ProfileConfig skewed_profile();
ProfileConfig dispersed_profile();

CorpusConfig default_noisy_corpus();
CorpusConfig skewed_profile_corpus();
CorpusConfig dispersed_profile_corpus();

}  // namespace diffudec

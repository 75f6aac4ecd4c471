#pragma once

#include <span>
#include <vector>

#include "diffudec/core.hpp"
#include "diffudec/denoiser.hpp"

namespace diffudec {

struct SelectionResult {
    std::vector<std::size_t> chosen;  // positions, ascending, never empty
    bool used_fallback = false;
};

// Commit the min(k, n) most confident candidates. Confidence ties break
// toward the lower position.
SelectionResult select_fixed_k(std::span<const Prediction> candidates, std::size_t k);

// Commit every candidate with confidence strictly above the threshold; if
// none qualifies, fall back to the single most confident one.
SelectionResult select_static(std::span<const Prediction> candidates, double threshold);

// Sort confidences descending as c(1) >= ... >= c(n) and commit the largest
// k with (k + 1) * (1 - c(k)) < factor; if no k qualifies, fall back to the
// single most confident candidate.
SelectionResult select_dynamic(std::span<const Prediction> candidates, double factor);

SelectionResult select(std::span<const Prediction> candidates, const StrategyConfig& strategy);

// Block decode loop: each round issues one model call covering every masked
// position of the active block, commits the strategy's selection, and stops
// when all cells are committed.
Trace decode_utterance(const Utterance& utt, const Denoiser& denoiser,
                       const StrategyConfig& strategy, std::size_t block_size);

// Left-to-right reference decode: one position per round, each conditioned
// on the fully committed prefix. Equivalent to any strategy at block size 1.
Trace decode_ar(const Utterance& utt, const Denoiser& denoiser);

// Confidences assigned by the first forward pass over a fully masked
// utterance (block size = utterance length), one entry per position.
std::vector<double> first_pass_confidences(const Utterance& utt, const Denoiser& denoiser);

}  // namespace diffudec

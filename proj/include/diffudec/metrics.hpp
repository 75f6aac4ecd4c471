#pragma once

#include <span>
#include <string>
#include <vector>

#include "diffudec/core.hpp"
#include "diffudec/denoiser.hpp"

namespace diffudec {

// Token error rate: edit distance over reference length. May exceed 1.
// Throws std::invalid_argument on an empty reference.
double wer(std::span<const TokenId> reference, std::span<const TokenId> hypothesis);

struct CostModel {
    double seconds_per_call = 0.05;  // > 0
};

// model_calls * seconds_per_call / duration_s; 0 calls gives 0.
double rtf_proxy(const Trace& trace, const CostModel& cost, double duration_s);

// One point per round that committed anything inside the horizon, preceded
// by the origin. Progress is the committed fraction of the first `horizon`
// positions; cum_nll accumulates the commit-time NLL of those positions.
struct TrajectoryPoint {
    double progress = 0.0;
    double cum_nll = 0.0;
};

std::vector<TrajectoryPoint> trajectory(const Trace& trace, std::size_t horizon);

// Trajectory of the left-to-right reference decode for the same utterance.
std::vector<TrajectoryPoint> ar_trajectory(const Utterance& utt, const Denoiser& denoiser,
                                           std::size_t horizon);

struct Throughput {
    std::vector<std::size_t> per_round;  // committed tokens per round; sums to L
    std::size_t stopping_round = 0;      // number of rounds = model calls
};

Throughput throughput(const Trace& trace);

// Complementary CDF: for each threshold, the fraction of confidences at or
// above it. Throws std::invalid_argument on empty confidences.
std::vector<double> ccdf(std::span<const double> confidences, std::span<const double> thresholds);

// P(X >= s) for X ~ Beta(alpha, beta); the analytic counterpart of the
// profile models' empirical confidence CCDF.
double beta_ccdf(double alpha, double beta, double s);

struct TradeoffPoint {
    std::string strategy;  // "fixed" / "static" / "dynamic" / "ar"
    std::string param;     // hyperparameter as printed in reports
    std::size_t block = 0; // 0 means fully parallel
    double wer = 0.0;
    double rtf = 0.0;
    double mean_rounds = 0.0;
};

// Non-dominated subset when both WER and RTF are lower-better, ordered by
// RTF ascending (ties keep the input order). Duplicates survive together.
std::vector<TradeoffPoint> pareto(std::span<const TradeoffPoint> points);

// One point per group: the one whose RTF is closest to the target, breaking
// ties toward the lower WER. Throws std::invalid_argument on an empty group.
std::vector<TradeoffPoint> match_rtf(std::span<const std::vector<TradeoffPoint>> groups,
                                     double target_rtf);

}  // namespace diffudec

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diffudec/core.hpp"
#include "diffudec/denoiser.hpp"
#include "diffudec/metrics.hpp"
#include "diffudec/svg.hpp"

namespace diffudec {

struct SweepConfig {
    std::string corpus_path;     // when empty, corpus_config is generated inline
    CorpusConfig corpus_config;
    std::vector<std::size_t> block_sizes;    // 0 means fully parallel (block = L)
    std::vector<StrategyConfig> strategies;
    CostModel cost;
    std::size_t horizon = 32;     // progress horizon for trajectory analysis
    std::size_t min_tokens = 32;  // utterance length filter for round-wise analysis
    std::uint64_t seed = 7;
    std::string output_dir = "sweep_out";
};

// The stock laboratory setup: default noisy-channel corpus, block sizes
// {4, 32, full}, k in {4, 8, 16, 32, 64, 128}, static thresholds
// {0.8, 0.9, 0.95}, dynamic factors {1.0, 0.2, 0.05}.
SweepConfig default_sweep_config();

void validate(const SweepConfig& cfg);

struct RunRecord {
    std::string utterance_id;
    std::string strategy;  // "fixed" / "static" / "dynamic" / "ar"
    std::string param;     // "-" for ar
    std::size_t block = 0; // 0 = fully parallel; ar runs use 1
    double wer = 0.0;
    double rtf = 0.0;
    std::size_t rounds = 0;
    std::size_t trace_index = 0;  // into SweepResult::traces
};

struct SweepResult {
    Corpus corpus;
    std::vector<RunRecord> records;
    std::vector<Trace> traces;             // parallel to records
    std::vector<TradeoffPoint> tradeoff;   // ar row first, then the grid in config order
};

// Decodes every utterance under every (strategy, block) cell plus the
// left-to-right reference. Results are identical for any worker count.
SweepResult run_sweep(const SweepConfig& cfg, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Corpus files: one JSON object per line plus a <path>.meta.json sidecar
// holding the vocabulary and the denoiser setup.

void write_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);

// ---------------------------------------------------------------------------
// Config files (strict: unknown keys are rejected)

CorpusConfig parse_corpus_config(const std::string& json_text);
SweepConfig parse_sweep_config(const std::string& json_text);

// ---------------------------------------------------------------------------
// Report rendering. All numbers use shortest round-trip formatting, so
// byte-identical output means bit-identical values.

std::string fmt_double(double v);

std::string runs_csv(const SweepResult& result);
std::string tradeoff_csv(std::span<const TradeoffPoint> points);
std::string traces_jsonl(const SweepResult& result);
std::string trajectory_csv(const SweepResult& result, std::size_t horizon, std::size_t min_tokens);
std::string throughput_csv(const SweepResult& result, std::size_t min_tokens);

std::vector<double> default_ccdf_thresholds();  // 0.00, 0.05, ..., 1.00
std::string ccdf_csv(std::span<const std::pair<std::string, std::vector<double>>> profiles,
                     std::span<const double> thresholds);

// First-pass confidences pooled over the whole corpus; the samples behind
// one ccdf.csv profile row group.
std::vector<double> corpus_first_pass_confidences(const Corpus& corpus);

// Writes runs.csv, tradeoff.csv, traces.jsonl, the manifest, and (for inline
// corpora) corpus.jsonl into the output directory.
void write_sweep_outputs(const SweepResult& result, const SweepConfig& cfg,
                         const std::string& dir);

struct AnalyzeOptions {
    std::optional<std::size_t> horizon;      // default: value from the sweep manifest
    std::optional<std::size_t> min_tokens;
    std::vector<std::pair<std::string, std::string>> extra_ccdf;  // (profile name, corpus path)
    std::optional<double> match_rtf_target;
};

// Reads a sweep output directory and writes trajectory.csv, throughput.csv,
// ccdf.csv, pareto.csv (and matched.csv when a target is given) next to it.
void run_analyze(const std::string& sweep_dir, const AnalyzeOptions& opts);

// ---------------------------------------------------------------------------
// Plots

enum class PlotKind { tradeoff, trajectory, throughput, ccdf };

SvgChart build_chart(PlotKind kind, const std::string& csv_text);

// ---------------------------------------------------------------------------
// Command line: gen-corpus | decode | sweep | analyze | plot.
// Returns 0 on success, 1 on usage or configuration errors, 2 on I/O errors.
// The DIFFUDEC_SEED environment variable overrides every config seed.

int cli(const std::vector<std::string>& args);

}  // namespace diffudec

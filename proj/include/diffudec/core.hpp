#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace diffudec {

using TokenId = std::int32_t;

// Raised when an operation would break a decode-state invariant
// (e.g. committing a cell twice or outside the active block).
class invariant_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class io_error : public std::runtime_error {
public:
    io_error(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Vocabulary and utterances

class Vocabulary {
public:
    explicit Vocabulary(std::vector<std::string> tokens);
    static Vocabulary synthetic(std::size_t n);

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
};

struct Utterance {
    std::string id;
    std::vector<TokenId> reference;     // ground-truth token sequence, length L >= 1
    std::vector<TokenId> observations;  // per-position noisy evidence, same length
    double duration_s = 0.0;

    std::size_t length() const { return reference.size(); }
};

// ---------------------------------------------------------------------------
// Decode state

struct CommittedCell {
    TokenId token = 0;
    std::size_t round = 0;  // round the commit happened in, >= 1
    double nll = 0.0;
};

// nullopt = still masked
using CellState = std::optional<CommittedCell>;

struct Prediction {
    std::size_t position = 0;
    TokenId token = 0;
    double confidence = 0.0;  // in (0, 1]
    double nll = 0.0;         // -ln(confidence)
};

struct CommitEvent {
    std::size_t round = 0;  // 1-based
    std::size_t block = 0;  // block index the commits happened in
    std::vector<Prediction> commits;
};

class DecodeState {
public:
    // L cells, all masked; block_size B; throws std::invalid_argument if
    // either is zero.
    DecodeState(std::size_t length, std::size_t block_size);

    std::size_t length() const { return cells_.size(); }
    std::size_t block_size() const { return block_size_; }
    std::size_t num_blocks() const { return num_blocks_; }
    std::size_t round() const { return round_; }

    // Index of the first block that still contains a masked cell;
    // equals num_blocks() once everything is committed.
    std::size_t active_block() const { return active_block_; }
    bool complete() const { return active_block_ == num_blocks_; }

    const CellState& cell(std::size_t pos) const { return cells_.at(pos); }
    const std::vector<CellState>& cells() const { return cells_; }

    // [first, last) positions of a block; the last block may be shorter.
    std::pair<std::size_t, std::size_t> block_range(std::size_t block) const;

    // Commits every prediction in the event. All touched cells must be
    // masked and inside the active block, and the event round must be the
    // next round number; otherwise invariant_error. Advances the round
    // counter and the active block.
    void apply_commits(const CommitEvent& event);

private:
    std::vector<CellState> cells_;
    std::size_t block_size_;
    std::size_t num_blocks_;
    std::size_t active_block_ = 0;
    std::size_t round_ = 0;
};

// Fraction of the first `horizon` positions that are committed, capped at 1.
// Throws std::invalid_argument if horizon is zero.
double normalized_progress(const DecodeState& state, std::size_t horizon);

// ---------------------------------------------------------------------------
// Decode trace

struct Trace {
    std::string utterance_id;
    std::vector<CommitEvent> events;
    std::size_t model_calls = 0;  // == events.size() for a finished decode
    std::vector<TokenId> hypothesis;

    std::size_t length() const { return hypothesis.size(); }
};

// True when the trace's events commit every position exactly once with
// consecutive rounds starting at 1.
bool trace_complete(const Trace& trace);

// ---------------------------------------------------------------------------
// Commitment strategies

struct FixedK {
    std::size_t k = 1;  // >= 1
};

struct StaticThreshold {
    double threshold = 0.9;  // in (0, 1)
};

struct DynamicThreshold {
    double factor = 0.2;  // > 0
};

using StrategyConfig = std::variant<FixedK, StaticThreshold, DynamicThreshold>;

// Throws std::invalid_argument when a parameter is out of range.
void validate_strategy(const StrategyConfig& strategy);

// "fixed" / "static" / "dynamic"
std::string strategy_label(const StrategyConfig& strategy);

// Hyperparameter rendered as a short string ("8", "0.9", "0.2").
std::string strategy_param(const StrategyConfig& strategy);

}  // namespace diffudec

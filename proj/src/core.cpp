#include "diffudec/core.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <unordered_set>

namespace diffudec {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.size() < 2) throw std::invalid_argument("vocabulary needs at least 2 tokens");
    std::unordered_set<std::string> seen;
    for (const auto& t : tokens_) {
        if (!seen.insert(t).second) throw std::invalid_argument("duplicate vocabulary token: " + t);
    }
}

Vocabulary Vocabulary::synthetic(std::size_t n) {
    std::vector<std::string> tokens;
    tokens.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "w%03zu", i);
        tokens.emplace_back(buf);
    }
    return Vocabulary(std::move(tokens));
}

DecodeState::DecodeState(std::size_t length, std::size_t block_size)
    : cells_(length), block_size_(block_size) {
    if (length == 0) throw std::invalid_argument("decode state needs length >= 1");
    if (block_size == 0) throw std::invalid_argument("decode state needs block size >= 1");
    num_blocks_ = (length + block_size - 1) / block_size;
}

std::pair<std::size_t, std::size_t> DecodeState::block_range(std::size_t block) const {
    if (block >= num_blocks_) throw std::invalid_argument("block index out of range");
    std::size_t first = block * block_size_;
    std::size_t last = std::min(first + block_size_, cells_.size());
    return {first, last};
}

void DecodeState::apply_commits(const CommitEvent& event) {
    if (complete()) throw invariant_error("commit on a completed decode");
    if (event.commits.empty()) throw invariant_error("commit event with no commits");
    if (event.round != round_ + 1) throw invariant_error("commit event round is not the next round");
    if (event.block != active_block_) throw invariant_error("commit event block is not the active block");

    auto [first, last] = block_range(active_block_);
    for (const auto& p : event.commits) {
        if (p.position < first || p.position >= last)
            throw invariant_error("commit outside the active block");
        if (cells_[p.position].has_value())
            throw invariant_error("commit to an already committed cell");
    }
    for (const auto& p : event.commits) {
        cells_[p.position] = CommittedCell{p.token, event.round, p.nll};
    }
    round_ = event.round;
    while (active_block_ < num_blocks_) {
        auto [f, l] = block_range(active_block_);
        bool done = true;
        for (std::size_t i = f; i < l; ++i) {
            if (!cells_[i].has_value()) {
                done = false;
                break;
            }
        }
        if (!done) break;
        ++active_block_;
    }
}

double normalized_progress(const DecodeState& state, std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("horizon must be >= 1");
    std::size_t count = 0;
    std::size_t limit = std::min(horizon, state.length());
    for (std::size_t i = 0; i < limit; ++i) {
        if (state.cell(i).has_value()) ++count;
    }
    double p = static_cast<double>(count) / static_cast<double>(horizon);
    return std::min(p, 1.0);
}

bool trace_complete(const Trace& trace) {
    if (trace.hypothesis.empty()) return false;
    if (trace.model_calls != trace.events.size()) return false;
    std::vector<bool> seen(trace.hypothesis.size(), false);
    std::size_t covered = 0;
    for (std::size_t e = 0; e < trace.events.size(); ++e) {
        if (trace.events[e].round != e + 1) return false;
        for (const auto& p : trace.events[e].commits) {
            if (p.position >= seen.size() || seen[p.position]) return false;
            seen[p.position] = true;
            ++covered;
        }
    }
    return covered == trace.hypothesis.size();
}

void validate_strategy(const StrategyConfig& strategy) {
    if (const auto* f = std::get_if<FixedK>(&strategy)) {
        if (f->k < 1) throw std::invalid_argument("fixed-k strategy needs k >= 1");
    } else if (const auto* s = std::get_if<StaticThreshold>(&strategy)) {
        if (!(s->threshold > 0.0 && s->threshold < 1.0))
            throw std::invalid_argument("static threshold must lie in (0, 1)");
    } else if (const auto* d = std::get_if<DynamicThreshold>(&strategy)) {
        if (!(d->factor > 0.0)) throw std::invalid_argument("dynamic threshold factor must be > 0");
    }
}

std::string strategy_label(const StrategyConfig& strategy) {
    if (std::holds_alternative<FixedK>(strategy)) return "fixed";
    if (std::holds_alternative<StaticThreshold>(strategy)) return "static";
    return "dynamic";
}

namespace {

std::string short_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string strategy_param(const StrategyConfig& strategy) {
    if (const auto* f = std::get_if<FixedK>(&strategy)) return std::to_string(f->k);
    if (const auto* s = std::get_if<StaticThreshold>(&strategy)) return short_double(s->threshold);
    return short_double(std::get<DynamicThreshold>(strategy).factor);
}

}  // namespace diffudec

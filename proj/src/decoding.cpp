#include "diffudec/decoding.hpp"

#include <algorithm>
#include <numeric>

namespace diffudec {

namespace {

// Candidate order shared by all strategies: confidence descending,
// position ascending among equals.
std::vector<std::size_t> by_confidence(std::span<const Prediction> candidates) {
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (candidates[a].confidence != candidates[b].confidence)
            return candidates[a].confidence > candidates[b].confidence;
        return candidates[a].position < candidates[b].position;
    });
    return order;
}

SelectionResult take_sorted(std::span<const Prediction> candidates,
                            const std::vector<std::size_t>& order, std::size_t count,
                            bool used_fallback) {
    SelectionResult result;
    result.used_fallback = used_fallback;
    result.chosen.reserve(count);
    for (std::size_t i = 0; i < count; ++i) result.chosen.push_back(candidates[order[i]].position);
    std::sort(result.chosen.begin(), result.chosen.end());
    return result;
}

}  // namespace

SelectionResult select_fixed_k(std::span<const Prediction> candidates, std::size_t k) {
    if (candidates.empty()) throw std::invalid_argument("selection needs at least one candidate");
    if (k < 1) throw std::invalid_argument("fixed-k selection needs k >= 1");
    auto order = by_confidence(candidates);
    return take_sorted(candidates, order, std::min(k, candidates.size()), false);
}

SelectionResult select_static(std::span<const Prediction> candidates, double threshold) {
    if (candidates.empty()) throw std::invalid_argument("selection needs at least one candidate");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("static threshold must lie in (0, 1)");
    SelectionResult result;
    for (const auto& c : candidates) {
        if (c.confidence > threshold) result.chosen.push_back(c.position);
    }
    if (result.chosen.empty()) {
        auto order = by_confidence(candidates);
        return take_sorted(candidates, order, 1, true);
    }
    std::sort(result.chosen.begin(), result.chosen.end());
    return result;
}

SelectionResult select_dynamic(std::span<const Prediction> candidates, double factor) {
    if (candidates.empty()) throw std::invalid_argument("selection needs at least one candidate");
    if (!(factor > 0.0)) throw std::invalid_argument("dynamic threshold factor must be > 0");
    auto order = by_confidence(candidates);
    std::size_t best_k = 0;
    for (std::size_t k = 1; k <= order.size(); ++k) {
        double ck = candidates[order[k - 1]].confidence;
        if (static_cast<double>(k + 1) * (1.0 - ck) < factor) best_k = k;
    }
    if (best_k == 0) return take_sorted(candidates, order, 1, true);
    return take_sorted(candidates, order, best_k, false);
}

SelectionResult select(std::span<const Prediction> candidates, const StrategyConfig& strategy) {
    if (const auto* f = std::get_if<FixedK>(&strategy)) return select_fixed_k(candidates, f->k);
    if (const auto* s = std::get_if<StaticThreshold>(&strategy))
        return select_static(candidates, s->threshold);
    return select_dynamic(candidates, std::get<DynamicThreshold>(strategy).factor);
}

namespace {

Trace finish_trace(const Utterance& utt, DecodeState& state, std::vector<CommitEvent> events) {
    Trace trace;
    trace.utterance_id = utt.id;
    trace.model_calls = events.size();
    trace.events = std::move(events);
    trace.hypothesis.resize(state.length());
    for (std::size_t i = 0; i < state.length(); ++i) trace.hypothesis[i] = state.cell(i)->token;
    return trace;
}

}  // namespace

Trace decode_utterance(const Utterance& utt, const Denoiser& denoiser,
                       const StrategyConfig& strategy, std::size_t block_size) {
    validate_strategy(strategy);
    if (utt.length() == 0) throw std::invalid_argument("utterance is empty");
    DecodeState state(utt.length(), block_size);
    std::vector<CommitEvent> events;
    while (!state.complete()) {
        std::size_t block = state.active_block();
        auto [first, last] = state.block_range(block);
        std::vector<Prediction> candidates;
        candidates.reserve(last - first);
        for (std::size_t pos = first; pos < last; ++pos) {
            if (!state.cell(pos).has_value()) candidates.push_back(denoiser.predict(utt, state, pos));
        }
        SelectionResult sel = select(candidates, strategy);
        CommitEvent event;
        event.round = state.round() + 1;
        event.block = block;
        event.commits.reserve(sel.chosen.size());
        for (std::size_t pos : sel.chosen) {
            auto it = std::find_if(candidates.begin(), candidates.end(),
                                   [pos](const Prediction& p) { return p.position == pos; });
            event.commits.push_back(*it);
        }
        state.apply_commits(event);
        events.push_back(std::move(event));
    }
    return finish_trace(utt, state, std::move(events));
}

Trace decode_ar(const Utterance& utt, const Denoiser& denoiser) {
    if (utt.length() == 0) throw std::invalid_argument("utterance is empty");
    DecodeState state(utt.length(), 1);
    std::vector<CommitEvent> events;
    for (std::size_t pos = 0; pos < utt.length(); ++pos) {
        Prediction p = denoiser.predict(utt, state, pos);
        CommitEvent event;
        event.round = pos + 1;
        event.block = pos;
        event.commits.push_back(p);
        state.apply_commits(event);
        events.push_back(std::move(event));
    }
    return finish_trace(utt, state, std::move(events));
}

std::vector<double> first_pass_confidences(const Utterance& utt, const Denoiser& denoiser) {
    if (utt.length() == 0) throw std::invalid_argument("utterance is empty");
    DecodeState state(utt.length(), utt.length());
    std::vector<double> confidences;
    confidences.reserve(utt.length());
    for (std::size_t pos = 0; pos < utt.length(); ++pos) {
        confidences.push_back(denoiser.predict(utt, state, pos).confidence);
    }
    return confidences;
}

}  // namespace diffudec

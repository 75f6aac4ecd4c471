#include "diffudec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "diffudec/decoding.hpp"

namespace diffudec {

double wer(std::span<const TokenId> reference, std::span<const TokenId> hypothesis) {
    if (reference.empty()) throw std::invalid_argument("wer needs a nonempty reference");
    // two-row Levenshtein
    std::vector<std::size_t> prev(hypothesis.size() + 1);
    std::vector<std::size_t> cur(hypothesis.size() + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= reference.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= hypothesis.size(); ++j) {
            std::size_t sub = prev[j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return static_cast<double>(prev[hypothesis.size()]) / static_cast<double>(reference.size());
}

double rtf_proxy(const Trace& trace, const CostModel& cost, double duration_s) {
    if (!(cost.seconds_per_call > 0.0))
        throw std::invalid_argument("cost model needs seconds_per_call > 0");
    if (!(duration_s > 0.0)) throw std::invalid_argument("rtf needs duration_s > 0");
    if (trace.model_calls == 0) return 0.0;
    return static_cast<double>(trace.model_calls) * cost.seconds_per_call / duration_s;
}

std::vector<TrajectoryPoint> trajectory(const Trace& trace, std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("trajectory needs horizon >= 1");
    if (!trace_complete(trace)) throw std::invalid_argument("trajectory needs a complete trace");
    std::vector<TrajectoryPoint> points;
    points.push_back({0.0, 0.0});
    std::size_t committed = 0;
    double cum = 0.0;
    for (const auto& event : trace.events) {
        std::size_t added = 0;
        for (const auto& p : event.commits) {
            if (p.position < horizon) {
                ++added;
                cum += p.nll;
            }
        }
        // rounds that commit nothing inside the horizon leave the curve
        // unchanged and add no point
        if (added == 0) continue;
        committed += added;
        double progress =
            std::min(static_cast<double>(committed) / static_cast<double>(horizon), 1.0);
        points.push_back({progress, cum});
    }
    return points;
}

std::vector<TrajectoryPoint> ar_trajectory(const Utterance& utt, const Denoiser& denoiser,
                                           std::size_t horizon) {
    return trajectory(decode_ar(utt, denoiser), horizon);
}

Throughput throughput(const Trace& trace) {
    if (!trace_complete(trace)) throw std::invalid_argument("throughput needs a complete trace");
    Throughput t;
    t.per_round.reserve(trace.events.size());
    for (const auto& event : trace.events) t.per_round.push_back(event.commits.size());
    t.stopping_round = trace.events.size();
    return t;
}

std::vector<double> ccdf(std::span<const double> confidences, std::span<const double> thresholds) {
    if (confidences.empty()) throw std::invalid_argument("ccdf needs at least one confidence");
    std::vector<double> fractions;
    fractions.reserve(thresholds.size());
    for (double s : thresholds) {
        std::size_t n = 0;
        for (double c : confidences) {
            if (c >= s) ++n;
        }
        fractions.push_back(static_cast<double>(n) / static_cast<double>(confidences.size()));
    }
    return fractions;
}

namespace {

// Continued fraction for the regularized incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 1e-14;
    constexpr double tiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

double beta_reg(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                      b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace

double beta_ccdf(double alpha, double beta, double s) {
    if (!(alpha > 0.0 && beta > 0.0)) throw std::invalid_argument("beta_ccdf needs alpha, beta > 0");
    return 1.0 - beta_reg(alpha, beta, s);
}

std::vector<TradeoffPoint> pareto(std::span<const TradeoffPoint> points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].rtf != points[b].rtf) return points[a].rtf < points[b].rtf;
        if (points[a].wer != points[b].wer) return points[a].wer < points[b].wer;
        return a < b;
    });
    std::vector<TradeoffPoint> front;
    double best_wer = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && points[order[j]].rtf == points[order[i]].rtf) ++j;
        double group_min = points[order[i]].wer;
        if (group_min < best_wer) {
            for (std::size_t g = i; g < j && points[order[g]].wer == group_min; ++g) {
                front.push_back(points[order[g]]);
            }
            best_wer = group_min;
        }
        i = j;
    }
    return front;
}

std::vector<TradeoffPoint> match_rtf(std::span<const std::vector<TradeoffPoint>> groups,
                                     double target_rtf) {
    std::vector<TradeoffPoint> matched;
    matched.reserve(groups.size());
    for (const auto& group : groups) {
        if (group.empty()) throw std::invalid_argument("match_rtf needs nonempty groups");
        const TradeoffPoint* best = &group.front();
        for (const auto& p : group) {
            double d = std::abs(p.rtf - target_rtf);
            double bd = std::abs(best->rtf - target_rtf);
            if (d < bd || (d == bd && p.wer < best->wer)) best = &p;
        }
        matched.push_back(*best);
    }
    return matched;
}

}  // namespace diffudec

#include "diffudec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "diffudec/decoding.hpp"

namespace diffudec {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Defaults and validation

SweepConfig default_sweep_config() {
    SweepConfig cfg;
    cfg.corpus_config = default_noisy_corpus();
    cfg.block_sizes = {4, 32, 0};
    for (std::size_t k : {4, 8, 16, 32, 64, 128}) cfg.strategies.push_back(FixedK{k});
    for (double c : {0.8, 0.9, 0.95}) cfg.strategies.push_back(StaticThreshold{c});
    for (double f : {1.0, 0.2, 0.05}) cfg.strategies.push_back(DynamicThreshold{f});
    return cfg;
}

void validate(const SweepConfig& cfg) {
    if (cfg.strategies.empty()) throw config_error("strategies: must not be empty");
    for (std::size_t i = 0; i < cfg.strategies.size(); ++i) {
        try {
            validate_strategy(cfg.strategies[i]);
        } catch (const std::invalid_argument& e) {
            throw config_error("strategies[" + std::to_string(i) + "] (" +
                               strategy_label(cfg.strategies[i]) + " " +
                               strategy_param(cfg.strategies[i]) + "): " + e.what());
        }
    }
    if (cfg.block_sizes.empty()) throw config_error("block_sizes: must not be empty");
    if (cfg.horizon == 0) throw config_error("horizon: must be >= 1");
    if (!(cfg.cost.seconds_per_call > 0.0)) throw config_error("cost.seconds_per_call: must be > 0");
    if (cfg.corpus_path.empty()) {
        try {
            validate(cfg.corpus_config);
        } catch (const std::invalid_argument& e) {
            throw config_error(std::string("corpus_config: ") + e.what());
        }
    }
}

// ---------------------------------------------------------------------------
// Sweep execution

namespace {

struct Cell {
    bool ar = false;
    StrategyConfig strategy;
    std::size_t block = 0;
    std::string label;
    std::string param;
};

std::vector<Cell> sweep_cells(const SweepConfig& cfg) {
    std::vector<Cell> cells;
    cells.push_back({true, FixedK{1}, 1, "ar", "-"});
    for (const auto& s : cfg.strategies) {
        for (std::size_t b : cfg.block_sizes) {
            cells.push_back({false, s, b, strategy_label(s), strategy_param(s)});
        }
    }
    return cells;
}

std::string cell_tag(const Cell& cell) {
    if (cell.ar) return "ar";
    return cell.label + "(" + cell.param + ")@" +
           (cell.block ? "b" + std::to_string(cell.block) : "full");
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg, unsigned threads) {
    validate(cfg);
    CorpusConfig cc = cfg.corpus_config;
    cc.seed = cfg.seed;  // one master seed per sweep
    SweepResult result{cfg.corpus_path.empty() ? generate_corpus(cc) : load_corpus(cfg.corpus_path),
                       {}, {}, {}};
    auto denoiser = result.corpus.make_denoiser();
    const auto cells = sweep_cells(cfg);
    const std::size_t n = result.corpus.utterances.size();
    const std::size_t total = cells.size() * n;
    result.records.resize(total);
    result.traces.resize(total);

    std::atomic<std::size_t> next{0};
    std::mutex fail_mutex;
    std::exception_ptr failure;
    auto worker = [&]() {
        try {
            for (;;) {
                std::size_t idx = next.fetch_add(1);
                if (idx >= total) return;
                const Cell& cell = cells[idx / n];
                const Utterance& utt = result.corpus.utterances[idx % n];
                Trace trace = cell.ar
                                  ? decode_ar(utt, *denoiser)
                                  : decode_utterance(utt, *denoiser, cell.strategy,
                                                     cell.block ? cell.block : utt.length());
                RunRecord rec;
                rec.utterance_id = utt.id;
                rec.strategy = cell.label;
                rec.param = cell.param;
                rec.block = cell.ar ? 1 : cell.block;
                rec.wer = wer(utt.reference, trace.hypothesis);
                rec.rtf = rtf_proxy(trace, cfg.cost, utt.duration_s);
                rec.rounds = trace.events.size();
                rec.trace_index = idx;
                result.records[idx] = std::move(rec);
                result.traces[idx] = std::move(trace);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(fail_mutex);
            if (!failure) failure = std::current_exception();
            next.store(total);
        }
    };

    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t c = 0; c < cells.size(); ++c) {
        TradeoffPoint p;
        p.strategy = cells[c].label;
        p.param = cells[c].param;
        p.block = cells[c].ar ? 1 : cells[c].block;
        double wer_sum = 0.0, rtf_sum = 0.0, round_sum = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            const RunRecord& rec = result.records[c * n + u];
            wer_sum += rec.wer;
            rtf_sum += rec.rtf;
            round_sum += static_cast<double>(rec.rounds);
        }
        p.wer = wer_sum / static_cast<double>(n);
        p.rtf = rtf_sum / static_cast<double>(n);
        p.mean_rounds = round_sum / static_cast<double>(n);
        result.tradeoff.push_back(std::move(p));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Corpus files

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(path, "cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(path, "cannot open for writing");
    out << text;
    if (!out) throw io_error(path, "write failed");
}

void expect_keys(const json& obj, const std::string& where,
                 std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) throw config_error(where + ": unknown key '" + it.key() + "'");
    }
}

json denoiser_to_json(const DenoiserSpec& spec) {
    json j;
    if (const auto* nc = std::get_if<NoisyChannelParams>(&spec)) {
        j["kind"] = "noisy_channel";
        j["epsilon"] = nc->epsilon;
        j["concentration"] = nc->concentration;
        j["smoothing"] = nc->smoothing;
    } else {
        const auto& p = std::get<ProfileConfig>(spec);
        j["kind"] = "profile";
        j["alpha"] = p.alpha;
        j["beta"] = p.beta;
        j["context_gain"] = p.context_gain;
        j["calibrated"] = p.calibrated;
    }
    return j;
}

DenoiserSpec denoiser_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind"))
        throw config_error(where + ": denoiser needs a 'kind'");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "noisy_channel") {
        expect_keys(j, where, {"kind", "epsilon", "concentration", "smoothing"});
        NoisyChannelParams p;
        if (j.contains("epsilon")) p.epsilon = j.at("epsilon").get<double>();
        if (j.contains("concentration")) p.concentration = j.at("concentration").get<double>();
        if (j.contains("smoothing")) p.smoothing = j.at("smoothing").get<double>();
        return p;
    }
    if (kind == "profile") {
        expect_keys(j, where, {"kind", "preset", "alpha", "beta", "context_gain", "calibrated"});
        ProfileConfig p;
        if (j.contains("preset")) {
            std::string preset = j.at("preset").get<std::string>();
            if (preset == "skewed") {
                p = skewed_profile();
            } else if (preset == "dispersed") {
                p = dispersed_profile();
            } else {
                throw config_error(where + ": unknown profile preset '" + preset + "'");
            }
        }
        if (j.contains("alpha")) p.alpha = j.at("alpha").get<double>();
        if (j.contains("beta")) p.beta = j.at("beta").get<double>();
        if (j.contains("context_gain")) p.context_gain = j.at("context_gain").get<double>();
        if (j.contains("calibrated")) p.calibrated = j.at("calibrated").get<bool>();
        return p;
    }
    throw config_error(where + ": unknown denoiser kind '" + kind + "'");
}

}  // namespace

void write_corpus(const Corpus& corpus, const std::string& path) {
    std::ostringstream lines;
    for (const auto& utt : corpus.utterances) {
        json j;
        j["id"] = utt.id;
        j["reference"] = utt.reference;
        j["observations"] = utt.observations;
        j["duration_s"] = utt.duration_s;
        lines << j.dump() << "\n";
    }
    write_text_file(path, lines.str());

    json meta;
    meta["name"] = corpus.name;
    meta["seed"] = corpus.seed;
    meta["token_duration_s"] = corpus.token_duration_s;
    meta["vocabulary"] = corpus.vocab.tokens();
    meta["denoiser"] = denoiser_to_json(corpus.denoiser_spec);
    write_text_file(path + ".meta.json", meta.dump(2) + "\n");
}

Corpus load_corpus(const std::string& path) {
    std::string meta_path = path + ".meta.json";
    json meta;
    try {
        meta = json::parse(read_text_file(meta_path));
    } catch (const json::exception& e) {
        throw io_error(meta_path, std::string("invalid sidecar: ") + e.what());
    }
    Corpus corpus{Vocabulary::synthetic(2), {}, NoisyChannelParams{}, 0.3, 0, ""};
    try {
        corpus.vocab = Vocabulary(meta.at("vocabulary").get<std::vector<std::string>>());
        corpus.denoiser_spec = denoiser_from_json(meta.at("denoiser"), meta_path);
        corpus.token_duration_s = meta.at("token_duration_s").get<double>();
        corpus.seed = meta.at("seed").get<std::uint64_t>();
        corpus.name = meta.value("name", std::string("corpus"));
    } catch (const json::exception& e) {
        throw io_error(meta_path, std::string("invalid sidecar: ") + e.what());
    } catch (const config_error& e) {
        throw io_error(meta_path, e.what());
    }

    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            Utterance utt;
            utt.id = j.at("id").get<std::string>();
            utt.reference = j.at("reference").get<std::vector<TokenId>>();
            utt.observations = j.at("observations").get<std::vector<TokenId>>();
            utt.duration_s = j.at("duration_s").get<double>();
            if (utt.reference.empty() || utt.reference.size() != utt.observations.size())
                throw io_error(path, "line " + std::to_string(line_no) + ": bad sequence lengths");
            for (TokenId t : utt.reference) {
                if (t < 0 || static_cast<std::size_t>(t) >= corpus.vocab.size())
                    throw io_error(path, "line " + std::to_string(line_no) + ": token out of range");
            }
            for (TokenId t : utt.observations) {
                if (t < 0 || static_cast<std::size_t>(t) >= corpus.vocab.size())
                    throw io_error(path, "line " + std::to_string(line_no) + ": token out of range");
            }
            if (!(utt.duration_s > 0.0))
                throw io_error(path, "line " + std::to_string(line_no) + ": duration must be > 0");
            corpus.utterances.push_back(std::move(utt));
        } catch (const json::exception& e) {
            throw io_error(path, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (corpus.utterances.empty()) throw io_error(path, "corpus has no utterances");
    return corpus;
}

// ---------------------------------------------------------------------------
// Config files

CorpusConfig parse_corpus_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("corpus config: ") + e.what());
    }
    expect_keys(j, "corpus config",
                {"num_utterances", "min_len", "max_len", "vocab_size", "token_duration_s", "seed",
                 "denoiser", "name"});
    CorpusConfig cfg;
    try {
        if (j.contains("num_utterances")) cfg.num_utterances = j.at("num_utterances").get<std::size_t>();
        if (j.contains("min_len")) cfg.min_len = j.at("min_len").get<std::size_t>();
        if (j.contains("max_len")) cfg.max_len = j.at("max_len").get<std::size_t>();
        if (j.contains("vocab_size")) cfg.vocab_size = j.at("vocab_size").get<std::size_t>();
        if (j.contains("token_duration_s")) cfg.token_duration_s = j.at("token_duration_s").get<double>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("denoiser")) cfg.denoiser = denoiser_from_json(j.at("denoiser"), "corpus config");
        if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
    } catch (const json::exception& e) {
        throw config_error(std::string("corpus config: ") + e.what());
    }
    try {
        validate(cfg);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("corpus config: ") + e.what());
    }
    return cfg;
}

namespace {

StrategyConfig strategy_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind")) throw config_error(where + ": needs a 'kind'");
    std::string kind = j.at("kind").get<std::string>();
    try {
        if (kind == "fixed") {
            expect_keys(j, where, {"kind", "k"});
            if (!j.contains("k")) throw config_error(where + ": fixed strategy needs 'k'");
            return FixedK{j.at("k").get<std::size_t>()};
        }
        if (kind == "static") {
            expect_keys(j, where, {"kind", "threshold"});
            if (!j.contains("threshold"))
                throw config_error(where + ": static strategy needs 'threshold'");
            return StaticThreshold{j.at("threshold").get<double>()};
        }
        if (kind == "dynamic") {
            expect_keys(j, where, {"kind", "factor"});
            if (!j.contains("factor")) throw config_error(where + ": dynamic strategy needs 'factor'");
            return DynamicThreshold{j.at("factor").get<double>()};
        }
    } catch (const json::exception& e) {
        throw config_error(where + ": " + e.what());
    }
    throw config_error(where + ": unknown strategy kind '" + kind + "'");
}

}  // namespace

SweepConfig parse_sweep_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("sweep config: ") + e.what());
    }
    expect_keys(j, "sweep config",
                {"corpus", "corpus_config", "block_sizes", "strategies", "cost", "horizon",
                 "min_tokens", "seed", "output_dir"});
    SweepConfig cfg = default_sweep_config();
    try {
        if (j.contains("corpus") && j.contains("corpus_config"))
            throw config_error("sweep config: give either 'corpus' or 'corpus_config', not both");
        if (j.contains("corpus")) cfg.corpus_path = j.at("corpus").get<std::string>();
        if (j.contains("corpus_config"))
            cfg.corpus_config = parse_corpus_config(j.at("corpus_config").dump());
        if (j.contains("block_sizes"))
            cfg.block_sizes = j.at("block_sizes").get<std::vector<std::size_t>>();
        if (j.contains("strategies")) {
            cfg.strategies.clear();
            const auto& arr = j.at("strategies");
            if (!arr.is_array()) throw config_error("sweep config: 'strategies' must be an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                cfg.strategies.push_back(
                    strategy_from_json(arr[i], "strategies[" + std::to_string(i) + "]"));
            }
        }
        if (j.contains("cost")) {
            expect_keys(j.at("cost"), "sweep config: cost", {"seconds_per_call"});
            if (j.at("cost").contains("seconds_per_call"))
                cfg.cost.seconds_per_call = j.at("cost").at("seconds_per_call").get<double>();
        }
        if (j.contains("horizon")) cfg.horizon = j.at("horizon").get<std::size_t>();
        if (j.contains("min_tokens")) cfg.min_tokens = j.at("min_tokens").get<std::size_t>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw config_error(std::string("sweep config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

// ---------------------------------------------------------------------------
// Report rendering

std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string runs_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "id,strategy,param,block,wer,rtf,rounds,trace\n";
    for (const auto& r : result.records) {
        out << r.utterance_id << "," << r.strategy << "," << r.param << "," << r.block << ","
            << fmt_double(r.wer) << "," << fmt_double(r.rtf) << "," << r.rounds << ","
            << r.trace_index << "\n";
    }
    return out.str();
}

std::string tradeoff_csv(std::span<const TradeoffPoint> points) {
    std::ostringstream out;
    out << "strategy,param,block,wer,rtf,mean_rounds\n";
    for (const auto& p : points) {
        out << p.strategy << "," << p.param << "," << p.block << "," << fmt_double(p.wer) << ","
            << fmt_double(p.rtf) << "," << fmt_double(p.mean_rounds) << "\n";
    }
    return out.str();
}

std::string traces_jsonl(const SweepResult& result) {
    std::ostringstream out;
    for (const auto& rec : result.records) {
        const Trace& trace = result.traces[rec.trace_index];
        json events = json::array();
        for (const auto& e : trace.events) {
            json commits = json::array();
            for (const auto& c : e.commits) {
                commits.push_back(json::array({c.position, c.token, c.nll}));
            }
            events.push_back(json::array({e.round, e.block, commits}));
        }
        json j;
        j["id"] = trace.utterance_id;
        j["strategy"] = rec.strategy;
        j["param"] = rec.param;
        j["block"] = rec.block;
        j["hyp"] = trace.hypothesis;
        j["events"] = events;
        out << j.dump() << "\n";
    }
    return out.str();
}

namespace {

// Cumulative NLL inside the horizon as a step function of the number of
// committed in-horizon positions.
std::vector<double> horizon_staircase(const Trace& trace, std::size_t horizon) {
    std::vector<double> vals(horizon + 1, 0.0);
    std::size_t count = 0;
    double cum = 0.0;
    for (const auto& event : trace.events) {
        std::size_t added = 0;
        for (const auto& c : event.commits) {
            if (c.position < horizon) {
                ++added;
                cum += c.nll;
            }
        }
        for (std::size_t g = count + 1; g <= count + added && g <= horizon; ++g) vals[g] = cum;
        count += added;
    }
    for (std::size_t g = std::min(count, horizon) + 1; g <= horizon; ++g) vals[g] = cum;
    return vals;
}

struct CellSlice {
    std::size_t first = 0;
    std::size_t last = 0;  // exclusive
};

// Records are laid out cell-major; recover the per-cell ranges.
std::vector<CellSlice> cell_slices(const SweepResult& result) {
    std::vector<CellSlice> slices;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= result.records.size(); ++i) {
        if (i == result.records.size() ||
            result.records[i].strategy != result.records[start].strategy ||
            result.records[i].param != result.records[start].param ||
            result.records[i].block != result.records[start].block) {
            slices.push_back({start, i});
            start = i;
        }
    }
    return slices;
}

std::string slice_tag(const SweepResult& result, const CellSlice& slice) {
    const RunRecord& r = result.records[slice.first];
    if (r.strategy == "ar") return "ar";
    return r.strategy + "(" + r.param + ")@" +
           (r.block ? "b" + std::to_string(r.block) : "full");
}

}  // namespace

std::string trajectory_csv(const SweepResult& result, std::size_t horizon, std::size_t min_tokens) {
    if (horizon == 0) throw std::invalid_argument("trajectory needs horizon >= 1");
    std::ostringstream out;
    out << "strategy,param,block,progress,cum_nll\n";
    for (const auto& slice : cell_slices(result)) {
        std::vector<double> sums(horizon + 1, 0.0);
        std::size_t used = 0;
        for (std::size_t i = slice.first; i < slice.last; ++i) {
            const Trace& trace = result.traces[result.records[i].trace_index];
            if (trace.length() < min_tokens) continue;
            auto vals = horizon_staircase(trace, horizon);
            for (std::size_t g = 0; g <= horizon; ++g) sums[g] += vals[g];
            ++used;
        }
        if (used == 0) continue;
        const RunRecord& r = result.records[slice.first];
        for (std::size_t g = 0; g <= horizon; ++g) {
            double progress = static_cast<double>(g) / static_cast<double>(horizon);
            out << r.strategy << "," << r.param << "," << r.block << "," << fmt_double(progress)
                << "," << fmt_double(sums[g] / static_cast<double>(used)) << "\n";
        }
    }
    return out.str();
}

std::string throughput_csv(const SweepResult& result, std::size_t min_tokens) {
    std::ostringstream out;
    out << "strategy,round,mean_tokens\n";
    for (const auto& slice : cell_slices(result)) {
        std::size_t used = 0;
        std::size_t max_rounds = 0;
        for (std::size_t i = slice.first; i < slice.last; ++i) {
            const Trace& trace = result.traces[result.records[i].trace_index];
            if (trace.length() < min_tokens) continue;
            ++used;
            max_rounds = std::max(max_rounds, trace.events.size());
        }
        if (used == 0) continue;
        std::string tag = slice_tag(result, slice);
        for (std::size_t round = 1; round <= max_rounds; ++round) {
            double sum = 0.0;
            for (std::size_t i = slice.first; i < slice.last; ++i) {
                const Trace& trace = result.traces[result.records[i].trace_index];
                if (trace.length() < min_tokens) continue;
                if (round <= trace.events.size())
                    sum += static_cast<double>(trace.events[round - 1].commits.size());
            }
            out << tag << "," << round << "," << fmt_double(sum / static_cast<double>(used))
                << "\n";
        }
    }
    return out.str();
}

std::vector<double> default_ccdf_thresholds() {
    std::vector<double> t;
    for (int i = 0; i <= 20; ++i) t.push_back(static_cast<double>(i) * 0.05);
    return t;
}

std::string ccdf_csv(std::span<const std::pair<std::string, std::vector<double>>> profiles,
                     std::span<const double> thresholds) {
    std::ostringstream out;
    out << "profile,threshold,fraction\n";
    for (const auto& [name, samples] : profiles) {
        auto fractions = ccdf(samples, thresholds);
        for (std::size_t i = 0; i < thresholds.size(); ++i) {
            out << name << "," << fmt_double(thresholds[i]) << "," << fmt_double(fractions[i])
                << "\n";
        }
    }
    return out.str();
}

std::vector<double> corpus_first_pass_confidences(const Corpus& corpus) {
    auto denoiser = corpus.make_denoiser();
    std::vector<double> confidences;
    for (const auto& utt : corpus.utterances) {
        auto c = first_pass_confidences(utt, *denoiser);
        confidences.insert(confidences.end(), c.begin(), c.end());
    }
    return confidences;
}

void write_sweep_outputs(const SweepResult& result, const SweepConfig& cfg,
                         const std::string& dir) {
    fs::create_directories(dir);
    std::string corpus_ref;
    if (cfg.corpus_path.empty()) {
        write_corpus(result.corpus, (fs::path(dir) / "corpus.jsonl").string());
        corpus_ref = "corpus.jsonl";
    } else {
        corpus_ref = fs::absolute(cfg.corpus_path).string();
    }
    write_text_file((fs::path(dir) / "runs.csv").string(), runs_csv(result));
    write_text_file((fs::path(dir) / "tradeoff.csv").string(), tradeoff_csv(result.tradeoff));
    write_text_file((fs::path(dir) / "traces.jsonl").string(), traces_jsonl(result));
    json manifest;
    manifest["corpus"] = corpus_ref;
    manifest["horizon"] = cfg.horizon;
    manifest["min_tokens"] = cfg.min_tokens;
    manifest["seconds_per_call"] = cfg.cost.seconds_per_call;
    manifest["seed"] = cfg.seed;
    write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Analyze: rebuild the sweep result from its files

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw io_error(path, "empty csv");
    return rows;
}

double parse_double(const std::string& s, const std::string& path) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw io_error(path, "bad number '" + s + "'");
    return v;
}

std::size_t parse_size(const std::string& s, const std::string& path) {
    std::size_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw io_error(path, "bad integer '" + s + "'");
    return v;
}

SweepResult load_sweep_dir(const std::string& dir, std::size_t* horizon, std::size_t* min_tokens) {
    std::string manifest_path = (fs::path(dir) / "manifest.json").string();
    json manifest;
    try {
        manifest = json::parse(read_text_file(manifest_path));
        *horizon = manifest.at("horizon").get<std::size_t>();
        *min_tokens = manifest.at("min_tokens").get<std::size_t>();
    } catch (const json::exception& e) {
        throw io_error(manifest_path, std::string("invalid manifest: ") + e.what());
    }
    std::string corpus_ref = manifest.at("corpus").get<std::string>();
    fs::path corpus_path(corpus_ref);
    if (corpus_path.is_relative()) corpus_path = fs::path(dir) / corpus_path;

    SweepResult result{load_corpus(corpus_path.string()), {}, {}, {}};

    std::string runs_path = (fs::path(dir) / "runs.csv").string();
    auto rows = parse_csv(read_text_file(runs_path), runs_path);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i];
        if (f.size() != 8) throw io_error(runs_path, "row with wrong field count");
        RunRecord rec;
        rec.utterance_id = f[0];
        rec.strategy = f[1];
        rec.param = f[2];
        rec.block = parse_size(f[3], runs_path);
        rec.wer = parse_double(f[4], runs_path);
        rec.rtf = parse_double(f[5], runs_path);
        rec.rounds = parse_size(f[6], runs_path);
        rec.trace_index = parse_size(f[7], runs_path);
        result.records.push_back(std::move(rec));
    }

    std::string traces_path = (fs::path(dir) / "traces.jsonl").string();
    std::istringstream in(read_text_file(traces_path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            Trace trace;
            trace.utterance_id = j.at("id").get<std::string>();
            trace.hypothesis = j.at("hyp").get<std::vector<TokenId>>();
            for (const auto& e : j.at("events")) {
                CommitEvent event;
                event.round = e.at(0).get<std::size_t>();
                event.block = e.at(1).get<std::size_t>();
                for (const auto& c : e.at(2)) {
                    Prediction p;
                    p.position = c.at(0).get<std::size_t>();
                    p.token = c.at(1).get<TokenId>();
                    p.nll = c.at(2).get<double>();
                    p.confidence = std::exp(-p.nll);
                    event.commits.push_back(p);
                }
                trace.events.push_back(std::move(event));
            }
            trace.model_calls = trace.events.size();
            result.traces.push_back(std::move(trace));
        } catch (const json::exception& e) {
            throw io_error(traces_path, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (result.traces.size() != result.records.size())
        throw io_error(traces_path, "trace count does not match runs.csv");

    // rebuild the tradeoff table from the per-run records
    for (const auto& slice : cell_slices(result)) {
        TradeoffPoint p;
        const RunRecord& r0 = result.records[slice.first];
        p.strategy = r0.strategy;
        p.param = r0.param;
        p.block = r0.block;
        double wer_sum = 0.0, rtf_sum = 0.0, round_sum = 0.0;
        for (std::size_t i = slice.first; i < slice.last; ++i) {
            wer_sum += result.records[i].wer;
            rtf_sum += result.records[i].rtf;
            round_sum += static_cast<double>(result.records[i].rounds);
        }
        double n = static_cast<double>(slice.last - slice.first);
        p.wer = wer_sum / n;
        p.rtf = rtf_sum / n;
        p.mean_rounds = round_sum / n;
        result.tradeoff.push_back(std::move(p));
    }
    return result;
}

}  // namespace

void run_analyze(const std::string& sweep_dir, const AnalyzeOptions& opts) {
    std::size_t horizon = 32, min_tokens = 32;
    SweepResult result = load_sweep_dir(sweep_dir, &horizon, &min_tokens);
    if (opts.horizon) horizon = *opts.horizon;
    if (opts.min_tokens) min_tokens = *opts.min_tokens;
    if (horizon == 0) throw config_error("horizon: must be >= 1");

    write_text_file((fs::path(sweep_dir) / "trajectory.csv").string(),
                    trajectory_csv(result, horizon, min_tokens));
    write_text_file((fs::path(sweep_dir) / "throughput.csv").string(),
                    throughput_csv(result, min_tokens));

    std::vector<std::pair<std::string, std::vector<double>>> profiles;
    profiles.emplace_back(result.corpus.name, corpus_first_pass_confidences(result.corpus));
    for (const auto& [name, path] : opts.extra_ccdf) {
        profiles.emplace_back(name, corpus_first_pass_confidences(load_corpus(path)));
    }
    auto thresholds = default_ccdf_thresholds();
    write_text_file((fs::path(sweep_dir) / "ccdf.csv").string(), ccdf_csv(profiles, thresholds));

    write_text_file((fs::path(sweep_dir) / "pareto.csv").string(),
                    tradeoff_csv(pareto(result.tradeoff)));

    if (opts.match_rtf_target) {
        std::vector<std::string> order;
        std::vector<std::vector<TradeoffPoint>> groups;
        for (const auto& p : result.tradeoff) {
            auto it = std::find(order.begin(), order.end(), p.strategy);
            if (it == order.end()) {
                order.push_back(p.strategy);
                groups.emplace_back();
                it = order.end() - 1;
            }
            groups[static_cast<std::size_t>(it - order.begin())].push_back(p);
        }
        auto matched = match_rtf(groups, *opts.match_rtf_target);
        write_text_file((fs::path(sweep_dir) / "matched.csv").string(), tradeoff_csv(matched));
    }
}

// ---------------------------------------------------------------------------
// Plots

namespace {

struct ParsedCsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

ParsedCsv csv_with_header(const std::string& text, std::initializer_list<const char*> expect) {
    auto rows = parse_csv(text, "csv");
    ParsedCsv out;
    out.header = rows.front();
    std::size_t i = 0;
    for (const char* col : expect) {
        if (i >= out.header.size() || out.header[i] != col)
            throw config_error(std::string("csv is missing column '") + col + "'");
        ++i;
    }
    out.rows.assign(rows.begin() + 1, rows.end());
    return out;
}

SvgSeries* series_named(std::vector<SvgSeries>& all, const std::string& label) {
    for (auto& s : all) {
        if (s.label == label) return &s;
    }
    all.push_back(SvgSeries{label, {}, false, false});
    return &all.back();
}

}  // namespace

SvgChart build_chart(PlotKind kind, const std::string& csv_text) {
    SvgChart chart;
    switch (kind) {
        case PlotKind::tradeoff: {
            auto csv = csv_with_header(csv_text,
                                       {"strategy", "param", "block", "wer", "rtf", "mean_rounds"});
            chart.title = "accuracy versus decoding cost";
            chart.x_label = "real-time factor proxy";
            chart.y_label = "token error rate";
            for (const auto& row : csv.rows) {
                auto* s = series_named(chart.series, row[0]);
                s->scatter = true;
                s->points.emplace_back(parse_double(row[4], "csv"), parse_double(row[3], "csv"));
            }
            break;
        }
        case PlotKind::trajectory: {
            auto csv = csv_with_header(csv_text,
                                       {"strategy", "param", "block", "progress", "cum_nll"});
            chart.title = "cumulative uncertainty by decode progress";
            chart.x_label = "committed fraction of the horizon";
            chart.y_label = "cumulative NLL";
            for (const auto& row : csv.rows) {
                std::string label = row[0] == "ar"
                                        ? "ar"
                                        : row[0] + "(" + row[1] + ")@" +
                                              (row[2] == "0" ? "full" : "b" + row[2]);
                auto* s = series_named(chart.series, label);
                s->dashed = (row[0] == "ar");
                s->points.emplace_back(parse_double(row[3], "csv"), parse_double(row[4], "csv"));
            }
            break;
        }
        case PlotKind::throughput: {
            auto csv = csv_with_header(csv_text, {"strategy", "round", "mean_tokens"});
            chart.title = "tokens committed per round";
            chart.x_label = "round";
            chart.y_label = "mean committed tokens";
            for (const auto& row : csv.rows) {
                auto* s = series_named(chart.series, row[0]);
                s->points.emplace_back(parse_double(row[1], "csv"), parse_double(row[2], "csv"));
            }
            break;
        }
        case PlotKind::ccdf: {
            auto csv = csv_with_header(csv_text, {"profile", "threshold", "fraction"});
            chart.title = "confidence survival by profile";
            chart.x_label = "confidence threshold";
            chart.y_label = "fraction at or above";
            for (const auto& row : csv.rows) {
                auto* s = series_named(chart.series, row[0]);
                s->points.emplace_back(parse_double(row[1], "csv"), parse_double(row[2], "csv"));
            }
            break;
        }
    }
    return chart;
}

// ---------------------------------------------------------------------------
// Command line

namespace {

std::optional<std::uint64_t> env_seed() {
    const char* raw = std::getenv("DIFFUDEC_SEED");
    if (!raw || !*raw) return std::nullopt;
    std::uint64_t v = 0;
    std::string s(raw);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw config_error("DIFFUDEC_SEED is not a valid unsigned integer: '" + s + "'");
    return v;
}

CorpusConfig preset_corpus(const std::string& kind) {
    if (kind == "noisy_channel") return default_noisy_corpus();
    if (kind == "skewed") return skewed_profile_corpus();
    if (kind == "dispersed") return dispersed_profile_corpus();
    throw config_error("unknown corpus kind '" + kind + "'");
}

int run_gen_corpus(const std::string& config_path, const std::string& kind,
                   std::optional<std::uint64_t> seed, std::optional<std::size_t> n,
                   const std::string& out) {
    CorpusConfig cfg =
        config_path.empty() ? preset_corpus(kind) : parse_corpus_config(read_text_file(config_path));
    if (seed) cfg.seed = *seed;
    if (n) cfg.num_utterances = *n;
    if (auto env = env_seed()) cfg.seed = *env;
    Corpus corpus = generate_corpus(cfg);
    write_corpus(corpus, out);
    std::cout << "wrote " << corpus.utterances.size() << " utterances to " << out << "\n";
    return 0;
}

int run_decode(const std::string& corpus_path, const std::string& id, std::size_t index,
               const std::string& strategy_name, std::optional<double> param,
               std::size_t block) {
    Corpus corpus = load_corpus(corpus_path);
    const Utterance* utt = nullptr;
    if (!id.empty()) {
        for (const auto& u : corpus.utterances) {
            if (u.id == id) {
                utt = &u;
                break;
            }
        }
        if (!utt) throw config_error("no utterance with id '" + id + "'");
    } else {
        if (index >= corpus.utterances.size())
            throw config_error("utterance index out of range (corpus has " +
                               std::to_string(corpus.utterances.size()) + ")");
        utt = &corpus.utterances[index];
    }
    auto denoiser = corpus.make_denoiser();

    Trace trace;
    std::string shown;
    if (strategy_name == "ar") {
        trace = decode_ar(*utt, *denoiser);
        shown = "ar";
    } else {
        StrategyConfig strategy;
        if (strategy_name == "fixed") {
            strategy = FixedK{static_cast<std::size_t>(param.value_or(8.0))};
        } else if (strategy_name == "static") {
            strategy = StaticThreshold{param.value_or(0.9)};
        } else if (strategy_name == "dynamic") {
            strategy = DynamicThreshold{param.value_or(0.2)};
        } else {
            throw config_error("unknown strategy '" + strategy_name + "'");
        }
        try {
            validate_strategy(strategy);
        } catch (const std::invalid_argument& e) {
            throw config_error(e.what());
        }
        trace = decode_utterance(*utt, *denoiser, strategy, block ? block : utt->length());
        shown = strategy_label(strategy) + "(" + strategy_param(strategy) + ")";
    }

    std::cout << utt->id << "  L=" << utt->length() << "  strategy=" << shown << "  block="
              << (strategy_name == "ar" ? "1" : (block ? std::to_string(block) : "full")) << "\n";
    for (const auto& event : trace.events) {
        std::cout << "round " << event.round << " block " << event.block << ":";
        for (const auto& c : event.commits) {
            std::cout << " " << c.position << "=" << corpus.vocab.token(c.token) << "("
                      << fmt_double(c.confidence) << ")";
        }
        std::cout << "\n";
    }
    std::cout << "hypothesis:";
    for (TokenId t : trace.hypothesis) std::cout << " " << corpus.vocab.token(t);
    std::cout << "\n";
    CostModel cost;
    std::cout << "wer=" << fmt_double(wer(utt->reference, trace.hypothesis))
              << " rounds=" << trace.events.size()
              << " rtf=" << fmt_double(rtf_proxy(trace, cost, utt->duration_s)) << "\n";
    return 0;
}

int run_sweep_cmd(const std::string& config_path, const std::string& corpus_path,
                  const std::string& out_dir, std::optional<std::uint64_t> seed,
                  unsigned threads) {
    SweepConfig cfg =
        config_path.empty() ? default_sweep_config() : parse_sweep_config(read_text_file(config_path));
    if (!corpus_path.empty()) cfg.corpus_path = corpus_path;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed) cfg.seed = *seed;
    if (auto env = env_seed()) cfg.seed = *env;
    SweepResult result = run_sweep(cfg, threads);
    write_sweep_outputs(result, cfg, cfg.output_dir);
    std::cout << "decoded " << result.corpus.utterances.size() << " utterances over "
              << result.tradeoff.size() << " cells into " << cfg.output_dir << "\n";
    return 0;
}

int run_analyze_cmd(const std::string& dir, std::optional<std::size_t> horizon,
                    std::optional<std::size_t> min_tokens,
                    const std::vector<std::string>& ccdf_corpora,
                    std::optional<double> match_target) {
    AnalyzeOptions opts;
    opts.horizon = horizon;
    opts.min_tokens = min_tokens;
    opts.match_rtf_target = match_target;
    for (const auto& spec : ccdf_corpora) {
        std::size_t eq = spec.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size())
            throw config_error("--ccdf-corpus expects name=path, got '" + spec + "'");
        opts.extra_ccdf.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
    }
    run_analyze(dir, opts);
    std::cout << "wrote trajectory.csv, throughput.csv, ccdf.csv, pareto.csv"
              << (match_target ? ", matched.csv" : "") << " in " << dir << "\n";
    return 0;
}

int run_plot(const std::string& kind_name, const std::string& in_path,
             const std::string& out_path) {
    PlotKind kind;
    if (kind_name == "tradeoff") {
        kind = PlotKind::tradeoff;
    } else if (kind_name == "trajectory") {
        kind = PlotKind::trajectory;
    } else if (kind_name == "throughput") {
        kind = PlotKind::throughput;
    } else if (kind_name == "ccdf") {
        kind = PlotKind::ccdf;
    } else {
        throw config_error("unknown plot kind '" + kind_name + "'");
    }
    SvgChart chart = build_chart(kind, read_text_file(in_path));
    write_text_file(out_path, render_svg(chart));
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int cli(const std::vector<std::string>& args) {
    CLI::App app{"synthetic laboratory for parallel-decoding commitment strategies"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
    std::string gen_config, gen_kind = "noisy_channel", gen_out = "corpus.jsonl";
    std::optional<std::uint64_t> gen_seed;
    std::optional<std::size_t> gen_n;
    gen->add_option("--config", gen_config, "corpus config JSON file");
    gen->add_option("--kind", gen_kind, "preset when no config file is given")
        ->check(CLI::IsMember({"noisy_channel", "skewed", "dispersed"}));
    gen->add_option("--seed", gen_seed, "seed override");
    gen->add_option("--n", gen_n, "number of utterances override");
    gen->add_option("--out", gen_out, "output JSONL path");

    auto* dec = app.add_subcommand("decode", "decode one utterance and print the trace");
    std::string dec_corpus, dec_id, dec_strategy = "static";
    std::size_t dec_index = 0, dec_block = 32;
    std::optional<double> dec_param;
    dec->add_option("--corpus", dec_corpus, "corpus JSONL path")->required();
    dec->add_option("--id", dec_id, "utterance id");
    dec->add_option("--index", dec_index, "utterance index (default 0)");
    dec->add_option("--strategy", dec_strategy, "fixed | static | dynamic | ar")
        ->check(CLI::IsMember({"fixed", "static", "dynamic", "ar"}));
    dec->add_option("--param", dec_param, "strategy hyperparameter");
    dec->add_option("--block", dec_block, "block size, 0 = fully parallel (default 32)");

    auto* swp = app.add_subcommand("sweep", "decode a corpus over the strategy/block grid");
    std::string swp_config, swp_corpus, swp_out;
    std::optional<std::uint64_t> swp_seed;
    unsigned swp_threads = 1;
    swp->add_option("--config", swp_config, "sweep config JSON file");
    swp->add_option("--corpus", swp_corpus, "corpus JSONL path override");
    swp->add_option("--out", swp_out, "output directory override");
    swp->add_option("--seed", swp_seed, "master seed override");
    swp->add_option("--threads", swp_threads, "worker threads (default 1)");

    auto* ana = app.add_subcommand("analyze", "derive round-wise reports from a sweep directory");
    std::string ana_dir;
    std::optional<std::size_t> ana_horizon, ana_min_tokens;
    std::optional<double> ana_match;
    std::vector<std::string> ana_ccdf;
    ana->add_option("--in", ana_dir, "sweep output directory")->required();
    ana->add_option("--horizon", ana_horizon, "progress horizon override");
    ana->add_option("--min-tokens", ana_min_tokens, "length filter override");
    ana->add_option("--ccdf-corpus", ana_ccdf, "extra name=path corpus for ccdf.csv");
    ana->add_option("--match-rtf", ana_match, "write matched.csv for this target RTF");

    auto* plt = app.add_subcommand("plot", "render a CSV report as an SVG chart");
    std::string plt_kind, plt_in, plt_out;
    plt->add_option("--kind", plt_kind, "tradeoff | trajectory | throughput | ccdf")
        ->required()
        ->check(CLI::IsMember({"tradeoff", "trajectory", "throughput", "ccdf"}));
    plt->add_option("--in", plt_in, "input CSV path")->required();
    plt->add_option("--out", plt_out, "output SVG path")->required();

    std::vector<const char*> argv;
    argv.push_back("diffudec");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(gen)) return run_gen_corpus(gen_config, gen_kind, gen_seed, gen_n, gen_out);
        if (app.got_subcommand(dec))
            return run_decode(dec_corpus, dec_id, dec_index, dec_strategy, dec_param, dec_block);
        if (app.got_subcommand(swp))
            return run_sweep_cmd(swp_config, swp_corpus, swp_out, swp_seed, swp_threads);
        if (app.got_subcommand(ana))
            return run_analyze_cmd(ana_dir, ana_horizon, ana_min_tokens, ana_ccdf, ana_match);
        if (app.got_subcommand(plt)) return run_plot(plt_kind, plt_in, plt_out);
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace diffudec

#include "prep/ocrnoise.hpp"

#include "prep/rng.hpp"
#include "prep/unicode.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

using json = nlohmann::json;

namespace prep::noise {

double ErrorModel::candidate_mass(char32_t source) const {
    auto it = table.find(source);
    if (it == table.end()) return 0.0;
    double total = 0.0;
    for (const auto& [cand, p] : it->second) total += p;
    return total;
}

std::string ErrorModel::to_json(int indent) const {
    json j = json::object();
    for (const auto& [source, cands] : table) {
        json inner = json::object();
        for (const auto& [cand, p] : cands) inner[utf8_encode(cand)] = p;
        j[utf8_encode(source)] = inner;
    }
    return j.dump(indent);
}

ErrorModel ErrorModel::from_json(const std::string& text) {
    json j = json::parse(text);
    if (!j.is_object()) throw std::runtime_error("ErrorModel: expected a JSON object");
    ErrorModel model;
    for (auto& [key, inner] : j.items()) {
        std::u32string source = utf8_decode(key);
        if (source.size() != 1)
            throw std::runtime_error("ErrorModel: source must be a single character: " + key);
        if (source[0] == kDeletionPlaceholder)
            throw std::runtime_error("ErrorModel: '@' cannot be a source character");
        auto& cands = model.table[source[0]];
        for (auto& [cand, p] : inner.items()) {
            double prob = p.get<double>();
            if (prob <= 0.0 || prob > 1.0)
                throw std::runtime_error("ErrorModel: probability out of (0,1] for " + key);
            cands[utf8_decode(cand)] = prob;
        }
    }
    for (const auto& [source, cands] : model.table) {
        double total = 0.0;
        for (const auto& [cand, p] : cands) total += p;
        if (total > 1.0 + 1e-9)
            throw std::runtime_error("ErrorModel: candidate mass exceeds 1 for a source char");
    }
    return model;
}

void ErrorModel::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("ErrorModel: cannot write " + path);
    f << to_json(2) << "\n";
}

ErrorModel ErrorModel::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("ErrorModel: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return from_json(text);
}

ErrorModel extract_error_model(const std::vector<align::EditScript>& scripts) {
    if (scripts.empty())
        throw std::invalid_argument("extract_error_model: empty corpus");

    struct Emission {
        char32_t source;
        std::u32string out;
    };

    std::map<char32_t, uint64_t> occurrences;
    std::map<char32_t, std::map<std::u32string, uint64_t>> counts;

    for (const align::EditScript& script : scripts) {
        std::vector<Emission> emissions;
        std::u32string leading; // inserts before the first GT-consuming op
        for (const align::EditOp& op : script.ops) {
            switch (op.kind) {
            case align::EditOpKind::Match:
                emissions.push_back({op.gt, std::u32string(1, op.hyp)});
                break;
            case align::EditOpKind::Substitute:
                emissions.push_back({op.gt, std::u32string(1, op.hyp)});
                break;
            case align::EditOpKind::Delete:
                emissions.push_back({op.gt, std::u32string()});
                break;
            case align::EditOpKind::Insert:
                if (emissions.empty())
                    leading.push_back(op.hyp);
                else
                    emissions.back().out.push_back(op.hyp);
                break;
            }
        }
        if (!leading.empty() && !emissions.empty())
            emissions.front().out = leading + emissions.front().out;

        for (const Emission& e : emissions) {
            if (e.source == kDeletionPlaceholder) continue; // '@' is never a source
            ++occurrences[e.source];
            bool identity = e.out.size() == 1 && e.out[0] == e.source;
            if (identity) continue;
            std::u32string cand =
                e.out.empty() ? std::u32string(1, kDeletionPlaceholder) : e.out;
            ++counts[e.source][cand];
        }
    }

    ErrorModel model;
    for (const auto& [source, cands] : counts) {
        uint64_t total = occurrences[source];
        for (const auto& [cand, n] : cands)
            model.table[source][cand] = double(n) / double(total);
    }
    return model;
}

std::u32string inject_errors(std::u32string_view text, const ErrorModel& model, double lambda,
                             uint64_t seed, const InjectOptions& opt) {
    Rng rng(seed);
    std::u32string out;
    out.reserve(text.size());

    // A small pool for optional standalone insertions.
    static const std::u32string kInsertPool = U" abcdefghijklmnopqrstuvwxyz";

    for (char32_t c : text) {
        auto it = model.table.find(c);
        bool replaced = false;
        if (it != model.table.end() && lambda > 0.0) {
            double total = 0.0;
            for (const auto& [cand, p] : it->second) total += p;
            double clip = lambda * total > 1.0 ? 1.0 / (lambda * total) : 1.0;
            double u = rng.next_double();
            double acc = 0.0;
            for (const auto& [cand, p] : it->second) {
                acc += lambda * p * clip;
                if (u < acc) {
                    out += cand;
                    replaced = true;
                    break;
                }
            }
        } else if (lambda > 0.0) {
            // Keep one draw per character regardless of table membership,
            // so the stream layout is stable when models change.
            rng.next_double();
        }
        if (!replaced) out.push_back(c);

        if (opt.insertion_rate > 0.0 && rng.bernoulli(opt.insertion_rate))
            out.push_back(kInsertPool[size_t(rng.next_below(kInsertPool.size()))]);
    }

    // Remove every deletion placeholder.
    std::u32string cleaned;
    cleaned.reserve(out.size());
    for (char32_t c : out)
        if (c != kDeletionPlaceholder) cleaned.push_back(c);
    return cleaned;
}

std::string inject_errors(std::string_view text_utf8, const ErrorModel& model,
                          const RateScale& scale, uint64_t seed, const InjectOptions& opt) {
    return utf8_encode(inject_errors(utf8_decode(text_utf8), model, scale.lambda, seed, opt));
}

namespace {
constexpr int kMeasureChunk = 512;
}

double measure_injected_cer(const ErrorModel& model, double lambda, std::u32string_view sample,
                            uint64_t seed) {
    if (sample.empty()) throw std::invalid_argument("measure_injected_cer: empty sample");
    uint64_t cost = 0, chars = 0;
    size_t chunk_index = 0;
    for (size_t pos = 0; pos < sample.size(); pos += kMeasureChunk, ++chunk_index) {
        std::u32string_view chunk = sample.substr(pos, kMeasureChunk);
        std::u32string noisy =
            inject_errors(chunk, model, lambda, derive_seed(seed, chunk_index));
        cost += align::edit_distance(chunk, noisy);
        chars += chunk.size();
    }
    return double(cost) / double(chars);
}

RateScale calibrate_rate(const ErrorModel& model, double target_cer,
                         std::string_view sample_utf8, uint64_t seed) {
    if (target_cer < 0.0)
        throw std::invalid_argument("calibrate_rate: negative target");
    std::u32string sample = utf8_decode(sample_utf8);
    if (sample.empty()) throw std::invalid_argument("calibrate_rate: empty sample");

    RateScale scale;
    scale.target_cer = target_cer;
    if (target_cer == 0.0 || model.empty()) {
        scale.lambda = 0.0;
        scale.achieved_cer = 0.0;
        scale.saturated = target_cer > 0.0 && model.empty();
        return scale;
    }

    // Common random numbers across lambda evaluations keep the empirical
    // CER effectively monotone in lambda.
    std::u32string_view probe =
        std::u32string_view(sample).substr(0, std::min<size_t>(sample.size(), 100'000));
    auto cer_at = [&](double lambda) {
        return measure_injected_cer(model, lambda, probe, seed);
    };

    const double kLambdaCeiling = 1e12; // all candidate masses fully clipped
    double ceiling_cer = cer_at(kLambdaCeiling);
    if (target_cer >= ceiling_cer * 0.999) {
        scale.lambda = kLambdaCeiling;
        scale.achieved_cer = ceiling_cer;
        scale.saturated = true;
        return scale;
    }

    double hi = 1.0, hi_cer = cer_at(hi);
    int guard = 0;
    while (hi_cer < target_cer && guard++ < 60) {
        hi *= 2.0;
        hi_cer = cer_at(hi);
    }
    double lo = hi > 1.0 ? hi / 2.0 : 0.0;

    double mid = hi, mid_cer = hi_cer;
    for (int iter = 0; iter < 48; ++iter) {
        mid = (lo + hi) / 2.0;
        mid_cer = cer_at(mid);
        if (std::abs(mid_cer - target_cer) <= 0.02 * target_cer) break;
        if (mid_cer < target_cer)
            lo = mid;
        else
            hi = mid;
    }
    scale.lambda = mid;
    scale.achieved_cer = mid_cer;
    return scale;
}

std::vector<std::u32string> chunk_sentences(std::u32string_view corpus, int max_len) {
    if (max_len < 1) throw std::invalid_argument("chunk_sentences: max_len must be >= 1");
    std::vector<std::u32string> chunks;
    size_t pos = 0;
    auto is_terminator = [](char32_t c) { return c == U'.' || c == U'!' || c == U'?'; };
    auto is_blank = [](char32_t c) { return c == U' ' || c == U'\n' || c == U'\t' || c == U'\r'; };
    while (pos < corpus.size()) {
        while (pos < corpus.size() && is_blank(corpus[pos])) ++pos;
        if (pos >= corpus.size()) break;
        size_t limit = std::min(corpus.size(), pos + size_t(max_len));
        size_t end = limit;
        if (limit < corpus.size()) {
            size_t best = 0;
            for (size_t i = pos; i + 1 < limit; ++i)
                if (is_terminator(corpus[i]) && is_blank(corpus[i + 1])) best = i + 1;
            if (best > pos) {
                end = best;
            } else {
                size_t ws = 0;
                for (size_t i = pos; i < limit; ++i)
                    if (is_blank(corpus[i])) ws = i;
                end = ws > pos ? ws : limit; // hard cut when no boundary exists
            }
        }
        std::u32string chunk(corpus.substr(pos, end - pos));
        while (!chunk.empty() && is_blank(chunk.back())) chunk.pop_back();
        if (!chunk.empty()) chunks.push_back(std::move(chunk));
        pos = end;
    }
    return chunks;
}

TrainingPairsSummary make_training_pairs(std::string_view corpus_utf8, const ErrorModel& model,
                                         const TrainingPairsOptions& opt) {
    if (opt.rate_grid.empty())
        throw std::invalid_argument("make_training_pairs: empty rate grid");
    std::u32string corpus = utf8_decode(corpus_utf8);
    if (corpus.empty()) throw std::invalid_argument("make_training_pairs: empty corpus");

    std::vector<std::u32string> chunks = chunk_sentences(corpus, opt.max_len);

    // One calibration per distinct target, reused across chunks.
    std::map<double, double> lambda_for_target;
    for (double t : opt.rate_grid) {
        if (lambda_for_target.count(t)) continue;
        if (t == 0.0) {
            lambda_for_target[t] = 0.0;
            continue;
        }
        RateScale s = calibrate_rate(model, t, utf8_encode(corpus), derive_seed(opt.seed, 0));
        lambda_for_target[t] = s.lambda;
    }

    std::ofstream out(opt.out_path, std::ios::binary);
    if (!out) throw std::runtime_error("make_training_pairs: cannot write " + opt.out_path);

    TrainingPairsSummary summary;
    for (size_t i = 0; i < chunks.size(); ++i) {
        uint64_t pair_seed = derive_seed(opt.seed, i + 1);
        Rng rng(pair_seed);
        double target = opt.rate_grid[size_t(rng.next_below(opt.rate_grid.size()))];
        double lambda = lambda_for_target.at(target);
        std::u32string noisy = inject_errors(chunks[i], model, lambda, derive_seed(pair_seed, 1));
        nlohmann::json rec{{"index", summary.pairs},
                           {"clean", utf8_encode(chunks[i])},
                           {"noisy", utf8_encode(noisy)},
                           {"target_cer", target},
                           {"lambda", lambda},
                           {"seed", pair_seed}};
        out << rec.dump() << "\n";
        ++summary.pairs;
    }
    summary.out_path = opt.out_path;
    return summary;
}

} // namespace prep::noise

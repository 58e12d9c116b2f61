#include "prep/correct.hpp"

#include "prep/unicode.hpp"

#include <algorithm>
#include <cmath>

namespace prep::lm {

namespace {
constexpr double kMinIdentityProb = 1e-12;
}

double Channel::identity_log_prob(char32_t c) const {
    auto it = identity_log.find(c);
    return it == identity_log.end() ? 0.0 : it->second;
}

Channel Channel::build(const noise::ErrorModel& model) {
    Channel ch;
    for (const auto& [source, cands] : model.table) {
        double mass = 0.0;
        for (const auto& [cand, p] : cands) {
            mass += p;
            if (cand.size() == 1 && cand[0] == noise::kDeletionPlaceholder) {
                ch.deletions.push_back({source, std::u32string(), std::log(p)});
            } else {
                // Placeholders inside longer candidates vanish after
                // injection; invert against the visible remainder.
                std::u32string emitted;
                for (char32_t c : cand)
                    if (c != noise::kDeletionPlaceholder) emitted.push_back(c);
                if (emitted.empty()) {
                    ch.deletions.push_back({source, std::u32string(), std::log(p)});
                } else {
                    ch.by_first_emitted[emitted[0]].push_back({source, emitted, std::log(p)});
                }
            }
        }
        ch.identity_log[source] = std::log(std::max(1.0 - mass, kMinIdentityProb));
    }
    // Deterministic proposal order.
    for (auto& [first, props] : ch.by_first_emitted)
        std::sort(props.begin(), props.end(), [](const Proposal& a, const Proposal& b) {
            if (a.source != b.source) return a.source < b.source;
            return a.emitted < b.emitted;
        });
    std::sort(ch.deletions.begin(), ch.deletions.end(),
              [](const Proposal& a, const Proposal& b) { return a.source < b.source; });
    return ch;
}

double score_derivation(const std::vector<DerivationStep>& steps, const CharLM& lm,
                        const Channel& channel, const BeamConfig& cfg) {
    double score = 0.0;
    std::u32string out;
    for (const DerivationStep& s : steps) {
        double chan;
        if (s.is_identity) {
            chan = channel.identity_log_prob(s.source);
        } else {
            // Look the proposal up to reuse the exact stored log.
            chan = -1e18;
            if (s.emitted.empty()) {
                for (const Channel::Proposal& p : channel.deletions)
                    if (p.source == s.source) chan = p.log_prob;
            } else {
                auto it = channel.by_first_emitted.find(s.emitted[0]);
                if (it != channel.by_first_emitted.end())
                    for (const Channel::Proposal& p : it->second)
                        if (p.source == s.source && p.emitted == s.emitted) chan = p.log_prob;
            }
        }
        score += cfg.channel_weight * chan + cfg.lm_weight * lm.log_prob(s.source, out);
        out.push_back(s.source);
    }
    return score;
}

namespace {

struct Hypothesis {
    std::u32string out;
    double score = 0.0;
    // Consumed positions (in the noisy text) of the most recent edits,
    // oldest first; bounded by cfg.max_edits_per_window.
    std::vector<uint32_t> recent_edits;
};

struct HypLess {
    bool operator()(const Hypothesis& a, const Hypothesis& b) const {
        if (a.score != b.score) return a.score > b.score;
        return a.out < b.out;
    }
};

void note_edit(Hypothesis& h, uint32_t pos, const BeamConfig& cfg) {
    h.recent_edits.push_back(pos);
    while (!h.recent_edits.empty() &&
           h.recent_edits.front() + uint32_t(cfg.window) <= pos)
        h.recent_edits.erase(h.recent_edits.begin());
}

bool edits_exhausted(const Hypothesis& h, uint32_t pos, const BeamConfig& cfg) {
    int live = 0;
    for (uint32_t p : h.recent_edits)
        if (p + uint32_t(cfg.window) > pos) ++live;
    return live >= cfg.max_edits_per_window;
}

// Merge duplicate states (same output and edit history keep the best
// score), then keep the top `cap` by score.
void canonicalize(std::vector<Hypothesis>& v, size_t cap) {
    std::sort(v.begin(), v.end(), [](const Hypothesis& a, const Hypothesis& b) {
        if (a.out != b.out) return a.out < b.out;
        if (a.recent_edits != b.recent_edits) return a.recent_edits < b.recent_edits;
        return a.score > b.score;
    });
    v.erase(std::unique(v.begin(), v.end(),
                        [](const Hypothesis& a, const Hypothesis& b) {
                            return a.out == b.out && a.recent_edits == b.recent_edits;
                        }),
            v.end());
    std::sort(v.begin(), v.end(), HypLess{});
    if (v.size() > cap) v.resize(cap);
}

} // namespace

std::u32string correct_line(std::u32string_view noisy, const CharLM& lm, const Channel& channel,
                            const BeamConfig& cfg) {
    if (noisy.empty()) return std::u32string();
    if (cfg.beam_width < 1) throw std::invalid_argument("correct_line: beam width must be >= 1");

    const size_t m = noisy.size();
    std::vector<std::vector<Hypothesis>> beams(m + 1);
    beams[0].push_back({});

    auto lm_log = [&](char32_t c, const std::u32string& ctx) {
        return cfg.lm_weight * lm.log_prob(c, ctx);
    };

    for (size_t j = 0; j <= m; ++j) {
        auto& bucket = beams[j];
        if (bucket.empty()) continue;
        canonicalize(bucket, size_t(cfg.beam_width));

        // Deletion-inverses extend hypotheses in place (consume nothing);
        // each one spends an edit inside the window, so the rounds are
        // bounded by the per-window edit budget.
        std::vector<Hypothesis> frontier = bucket;
        for (int round = 0; round < cfg.max_edits_per_window && !channel.deletions.empty();
             ++round) {
            std::vector<Hypothesis> added;
            for (const Hypothesis& h : frontier) {
                if (edits_exhausted(h, uint32_t(j), cfg)) continue;
                for (const Channel::Proposal& p : channel.deletions) {
                    Hypothesis nh = h;
                    nh.score += cfg.channel_weight * p.log_prob + lm_log(p.source, h.out);
                    nh.out.push_back(p.source);
                    note_edit(nh, uint32_t(j), cfg);
                    added.push_back(std::move(nh));
                }
            }
            if (added.empty()) break;
            canonicalize(added, size_t(cfg.beam_width));
            bucket.insert(bucket.end(), added.begin(), added.end());
            frontier = std::move(added);
        }
        canonicalize(bucket, size_t(cfg.beam_width));

        if (j == m) break;

        const char32_t c = noisy[j];
        for (const Hypothesis& h : bucket) {
            // Copy: source char equals the observed one.
            {
                Hypothesis nh = h;
                nh.score += cfg.channel_weight * channel.identity_log_prob(c) + lm_log(c, h.out);
                nh.out.push_back(c);
                beams[j + 1].push_back(std::move(nh));
            }
            if (edits_exhausted(h, uint32_t(j), cfg)) continue;
            auto it = channel.by_first_emitted.find(c);
            if (it == channel.by_first_emitted.end()) continue;
            for (const Channel::Proposal& p : it->second) {
                if (p.emitted.size() > m - j) continue;
                if (noisy.substr(j, p.emitted.size()) != p.emitted) continue;
                Hypothesis nh = h;
                nh.score += cfg.channel_weight * p.log_prob + lm_log(p.source, h.out);
                nh.out.push_back(p.source);
                note_edit(nh, uint32_t(j), cfg);
                beams[j + size_t(p.emitted.size())].push_back(std::move(nh));
            }
        }
    }

    // Identity (pure copy) score, accumulated in the same order.
    double copy_score = 0.0;
    {
        std::u32string ctx;
        for (char32_t c : noisy) {
            copy_score +=
                cfg.channel_weight * channel.identity_log_prob(c) + lm_log(c, ctx);
            ctx.push_back(c);
        }
    }

    const auto& final_bucket = beams[m];
    if (final_bucket.empty()) return std::u32string(noisy);
    const Hypothesis* best = &final_bucket[0];
    for (const Hypothesis& h : final_bucket)
        if (HypLess{}(h, *best)) best = &h;
    if (best->score > copy_score) return best->out;
    return std::u32string(noisy);
}

std::string correct_text(std::string_view noisy_utf8, const CharLM& lm,
                         const noise::ErrorModel& channel_model, const BeamConfig& cfg) {
    return correct_text(noisy_utf8, lm, Channel::build(channel_model), cfg);
}

std::string correct_text(std::string_view noisy_utf8, const CharLM& lm, const Channel& channel,
                         const BeamConfig& cfg) {
    std::u32string text = utf8_decode(noisy_utf8);
    std::u32string out;
    out.reserve(text.size());
    size_t start = 0;
    while (start <= text.size()) {
        size_t nl = text.find(U'\n', start);
        size_t end = nl == std::u32string::npos ? text.size() : nl;
        std::u32string_view line = std::u32string_view(text).substr(start, end - start);
        if (line.size() > 8000) {
            out += line; // beam memory guard; leave pathological lines alone
        } else if (!line.empty()) {
            out += correct_line(line, lm, channel, cfg);
        }
        if (nl == std::u32string::npos) break;
        out.push_back(U'\n');
        start = nl + 1;
    }
    return utf8_encode(out);
}

} // namespace prep::lm

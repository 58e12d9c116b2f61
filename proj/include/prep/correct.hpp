#pragma once
// Hermetic reference post-corrector: a count-based character n-gram
// language model plus the ErrorModel as a noisy channel, decoded by beam
// search. Stands in for a trained sequence-to-sequence corrector so the
// full pipeline runs end to end without neural training; reports label it
// "reference corrector".

#include "prep/ocrnoise.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace prep::lm {

class CharLM {
public:
    // Deterministic count model with add-k smoothing and backoff to
    // shorter contexts on unseen ones. At most 4095 distinct characters.
    static CharLM train(std::string_view corpus_utf8, int order = 5, double k = 0.01);

    int order() const { return order_; }
    double add_k() const { return k_; }
    size_t vocab_size() const { return vocab_.size(); }
    bool knows(char32_t c) const { return char_id(c) >= 0; }

    // log P(c | context); context is the preceding text, only the last
    // order-1 characters matter.
    double log_prob(char32_t c, std::u32string_view context) const;
    double prob(char32_t c, std::u32string_view context) const;

    void save(const std::string& path) const;
    static CharLM load(const std::string& path);

    const std::vector<char32_t>& vocab() const { return vocab_; }

private:
    CharLM() = default;

    int char_id(char32_t c) const;
    // Packed key: 12 bits per symbol, most recent last; length tag on top.
    static uint64_t pack(const uint16_t* ids, int len);

    int order_ = 5;
    double k_ = 0.01;
    std::vector<char32_t> vocab_; // sorted
    std::unordered_map<char32_t, uint16_t> ids_;
    std::unordered_map<uint64_t, uint32_t> counts_; // (context, char) -> count
    std::unordered_map<uint64_t, uint32_t> totals_; // context -> count
};

struct BeamConfig {
    int beam_width = 16;
    double channel_weight = 1.0;
    double lm_weight = 1.0;
    int max_edits_per_window = 4;
    int window = 16; // consumed characters
};

// Channel edits inverted from an ErrorModel: proposals that map observed
// text back to plausible sources.
struct Channel {
    struct Proposal {
        char32_t source;
        std::u32string emitted; // what the channel produced ("" for "@")
        double log_prob;
    };
    std::unordered_map<char32_t, std::vector<Proposal>> by_first_emitted;
    std::vector<Proposal> deletions; // consume nothing, re-insert source
    std::unordered_map<char32_t, double> identity_log;

    double identity_log_prob(char32_t c) const;
    static Channel build(const noise::ErrorModel& model);
};

// Beam-decodes one line. Returns the argmax hypothesis, or the input when
// nothing scores strictly higher.
std::u32string correct_line(std::u32string_view noisy, const CharLM& lm, const Channel& channel,
                            const BeamConfig& cfg);

// Line-by-line correction of a whole text.
std::string correct_text(std::string_view noisy_utf8, const CharLM& lm,
                         const noise::ErrorModel& channel_model, const BeamConfig& cfg = {});
std::string correct_text(std::string_view noisy_utf8, const CharLM& lm, const Channel& channel,
                         const BeamConfig& cfg = {});

// Scores a complete (source, segmentation) derivation the same way the
// beam accumulates it; shared by the decoder and the test oracle.
struct DerivationStep {
    char32_t source;
    std::u32string emitted;
    bool is_identity;
};
double score_derivation(const std::vector<DerivationStep>& steps, const CharLM& lm,
                        const Channel& channel, const BeamConfig& cfg);

} // namespace prep::lm

#pragma once
// Character-level OCR error modeling: extract per-character error sets from
// aligned corpora, scale them to a target CER, and inject calibrated errors
// into clean text to produce post-correction training pairs. "@" is the
// deletion placeholder and is stripped after injection.

#include "prep/textalign.hpp"

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace prep::noise {

constexpr char32_t kDeletionPlaceholder = U'@';

struct ErrorModel {
    // source char -> (candidate string -> probability). Candidates may be
    // multi-character, contain spaces, or be "@" (deletion). Probabilities
    // are conditioned on source-character occurrences and sum to <= 1 per
    // source; the remainder is implicit identity mass.
    std::map<char32_t, std::map<std::u32string, double>> table;

    double candidate_mass(char32_t source) const;
    bool empty() const { return table.empty(); }

    std::string to_json(int indent = -1) const;
    static ErrorModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static ErrorModel load(const std::string& path);
};

// Builds the model from align_exact scripts. Substitutions count as 1->1
// candidates; inserts merge into the preceding GT character's emission
// (leading inserts attach to the following one); deletions count as "@".
// Probabilities normalize by total GT occurrences of each source character.
ErrorModel extract_error_model(const std::vector<align::EditScript>& scripts);

struct RateScale {
    double lambda = 1.0;
    double target_cer = 0.0;
    double achieved_cer = 0.0; // empirical CER at this lambda on the sample
    bool saturated = false;    // target unreachable under per-char clipping
};

// Bisection on lambda with common random numbers until the Monte-Carlo CER
// is within +-2% relative of the target (or the clipping ceiling is hit,
// reported as saturation).
RateScale calibrate_rate(const ErrorModel& model, double target_cer,
                         std::string_view sample_utf8, uint64_t seed);

struct InjectOptions {
    double insertion_rate = 0.0; // standalone insertions, off by default
};

std::u32string inject_errors(std::u32string_view text, const ErrorModel& model, double lambda,
                             uint64_t seed, const InjectOptions& opt = {});
std::string inject_errors(std::string_view text_utf8, const ErrorModel& model,
                          const RateScale& scale, uint64_t seed, const InjectOptions& opt = {});

// Chunked empirical CER of injection at this lambda (512-char chunks,
// exact DP per chunk).
double measure_injected_cer(const ErrorModel& model, double lambda, std::u32string_view sample,
                            uint64_t seed);

struct TrainingPairsOptions {
    std::vector<double> rate_grid; // target CERs, drawn uniformly per pair
    int max_len = 512;             // Unicode scalars per clean chunk
    uint64_t seed = 0;
    std::string out_path; // JSONL manifest
};

struct TrainingPairsSummary {
    int pairs = 0;
    std::string out_path;
};

// Chunks the corpus at sentence-ish boundaries (terminator, then
// whitespace, then hard cut), draws a target CER per chunk, injects, and
// writes JSONL records {index, clean, noisy, target_cer, lambda, seed}.
TrainingPairsSummary make_training_pairs(std::string_view corpus_utf8, const ErrorModel& model,
                                         const TrainingPairsOptions& opt);

// Exposed for tests: the chunker used by make_training_pairs.
std::vector<std::u32string> chunk_sentences(std::u32string_view corpus, int max_len);

} // namespace prep::noise

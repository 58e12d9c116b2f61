#pragma once
// OCR output vs ground-truth alignment: exact Levenshtein scripts with
// deterministic tie-breaking, anchored long-document alignment with
// unmatched-segment discarding, CER/WER, and outlier-page filtering.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace prep::align {

enum class EditOpKind { Match, Substitute, Insert, Delete };

struct EditOp {
    EditOpKind kind;
    char32_t gt = 0;  // Match / Substitute / Delete
    char32_t hyp = 0; // Match / Substitute / Insert
};

struct EditScript {
    std::vector<EditOp> ops;
    uint64_t cost() const; // substitutions + insertions + deletions
    // Replays the script over its GT side; equals the hypothesis.
    std::u32string replay() const;
};

// Minimal unit-cost script. Tie-breaking during backtrace prefers
// match > substitute > delete > insert, so scripts are deterministic.
EditScript align_exact(std::u32string_view gt, std::u32string_view hyp);

// Cost-only Levenshtein (rolling rows, no script).
uint64_t edit_distance(std::u32string_view gt, std::u32string_view hyp);

// Cost-only distance over word tokens.
uint64_t word_edit_distance(const std::vector<std::u32string>& gt,
                            const std::vector<std::u32string>& hyp);

// Canonical composition over the Latin repertoire (NFC restricted to the
// scripts this toolkit targets): decompose precomposed Latin letters,
// order combining marks canonically, recompose.
std::u32string nfc_latin(std::u32string_view s);

// Full CER preprocessing: UTF-8 decode, NFC, collapse whitespace runs
// (newlines included) to single spaces, trim outer whitespace.
std::u32string normalize_text(std::string_view utf8);

std::vector<std::u32string> split_words(std::u32string_view s);

struct Rates {
    double cer = 0.0;
    double wer = 0.0;
    uint64_t char_cost = 0, gt_chars = 0;
    uint64_t word_cost = 0, gt_words = 0;
};

// Whole-text rates after normalization. Throws when GT normalizes to empty.
Rates error_rates(std::string_view gt_utf8, std::string_view hyp_utf8);

struct SegmentPair {
    uint64_t gt_begin = 0, gt_end = 0;   // offsets into the normalized GT
    uint64_t hyp_begin = 0, hyp_end = 0; // offsets into the normalized hyp
    uint64_t cost = 0;                   // char-level edit cost
};

struct HypSpan {
    uint64_t begin = 0, end = 0;
};

struct DocumentAlignment {
    std::vector<SegmentPair> matched;
    std::vector<HypSpan> unmatched_hyp; // discarded from CER
    bool matched_any = false;
    uint64_t total_cost = 0;
    uint64_t gt_begin = 0, gt_end = 0; // GT region covered by the hypothesis
    double cer = 0.0, wer = 0.0;       // over the matched region
    uint64_t gt_chars = 0, gt_words = 0;
};

struct AlignDocumentOptions {
    int anchor_n = 4;               // words per anchor n-gram
    uint64_t fallback_cap = 20000;  // max chars for whole-text DP when no anchor exists
    uint64_t band_slack = 64;       // banded-DP slack beyond the length difference
    uint64_t banded_above = 2048;   // gaps longer than this use the banded DP
};

// Anchored alignment of a hypothesis (e.g. one OCR page) against a
// possibly much larger ground truth. Hypothesis stretches with no GT
// counterpart are reported unmatched; GT outside the covered region does
// not count against the hypothesis.
DocumentAlignment align_document(std::string_view gt_utf8, std::string_view hyp_utf8,
                                 const AlignDocumentOptions& opt = {});

struct PageEval {
    std::string page_id;
    double cer = 0.0;
    double wer = 0.0;
    uint64_t gt_length = 0; // matched GT chars
    bool matched = false;
    bool outlier = false; // cer > threshold (strictly)
};

PageEval evaluate_page(const std::string& page_id, std::string_view gt_utf8,
                       std::string_view hyp_utf8, const AlignDocumentOptions& opt = {},
                       double outlier_threshold = 0.25);

struct FilterStats {
    double mean_cer_all = 0.0, mean_wer_all = 0.0;
    double mean_cer_kept = 0.0, mean_wer_kept = 0.0;
    size_t pages_all = 0, pages_kept = 0;
};

struct FilterResult {
    std::vector<PageEval> kept;
    std::vector<PageEval> dropped;
    FilterStats stats;
};

// Partition by cer > threshold (strict). Pages with matched == false are
// dropped and excluded from both means.
FilterResult filter_outliers(const std::vector<PageEval>& pages, double threshold = 0.25);

} // namespace prep::align

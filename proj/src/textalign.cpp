#include "prep/textalign.hpp"

#include "prep/unicode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace prep::align {

namespace {

constexpr uint32_t kInf = std::numeric_limits<uint32_t>::max() / 2;

bool is_space(char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v';
}

} // namespace

uint64_t EditScript::cost() const {
    uint64_t c = 0;
    for (const EditOp& op : ops)
        if (op.kind != EditOpKind::Match) ++c;
    return c;
}

std::u32string EditScript::replay() const {
    std::u32string out;
    for (const EditOp& op : ops)
        if (op.kind != EditOpKind::Delete) out.push_back(op.hyp);
    return out;
}

EditScript align_exact(std::u32string_view gt, std::u32string_view hyp) {
    const size_t n = gt.size(), m = hyp.size();
    if ((n + 1) * (m + 1) > 100'000'000ull)
        throw std::invalid_argument("align_exact: texts too large, use align_document");

    // Back codes: 0 diag (match/sub), 2 up (delete), 3 left (insert).
    std::vector<uint8_t> back((n + 1) * (m + 1));
    std::vector<uint32_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) {
        prev[j] = uint32_t(j);
        back[j] = 3;
    }
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = uint32_t(i);
        back[i * (m + 1)] = 2;
        for (size_t j = 1; j <= m; ++j) {
            bool eq = gt[i - 1] == hyp[j - 1];
            uint32_t best = prev[j - 1] + (eq ? 0 : 1);
            uint8_t op = 0;
            if (prev[j] + 1 < best) {
                best = prev[j] + 1;
                op = 2;
            }
            if (cur[j - 1] + 1 < best) {
                best = cur[j - 1] + 1;
                op = 3;
            }
            cur[j] = best;
            back[i * (m + 1) + j] = op;
        }
        std::swap(prev, cur);
    }

    EditScript script;
    script.ops.reserve(std::max(n, m));
    size_t i = n, j = m;
    while (i > 0 || j > 0) {
        uint8_t op = back[i * (m + 1) + j];
        if (i > 0 && j > 0 && op == 0) {
            bool eq = gt[i - 1] == hyp[j - 1];
            script.ops.push_back({eq ? EditOpKind::Match : EditOpKind::Substitute, gt[i - 1],
                                  hyp[j - 1]});
            --i;
            --j;
        } else if (i > 0 && (op == 2 || j == 0)) {
            script.ops.push_back({EditOpKind::Delete, gt[i - 1], 0});
            --i;
        } else {
            script.ops.push_back({EditOpKind::Insert, 0, hyp[j - 1]});
            --j;
        }
    }
    std::reverse(script.ops.begin(), script.ops.end());
    return script;
}

uint64_t edit_distance(std::u32string_view gt, std::u32string_view hyp) {
    const size_t n = gt.size(), m = hyp.size();
    std::vector<uint32_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = uint32_t(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = uint32_t(i);
        for (size_t j = 1; j <= m; ++j) {
            uint32_t best = prev[j - 1] + (gt[i - 1] == hyp[j - 1] ? 0 : 1);
            best = std::min(best, prev[j] + 1);
            best = std::min(best, cur[j - 1] + 1);
            cur[j] = best;
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

uint64_t word_edit_distance(const std::vector<std::u32string>& gt,
                            const std::vector<std::u32string>& hyp) {
    const size_t n = gt.size(), m = hyp.size();
    std::vector<uint32_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = uint32_t(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = uint32_t(i);
        for (size_t j = 1; j <= m; ++j) {
            uint32_t best = prev[j - 1] + (gt[i - 1] == hyp[j - 1] ? 0 : 1);
            best = std::min(best, prev[j] + 1);
            best = std::min(best, cur[j - 1] + 1);
            cur[j] = best;
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

namespace {

// Banded cost-only distance. Exact while the optimal path stays inside the
// band; otherwise an upper bound from in-band paths.
uint64_t edit_distance_banded(std::u32string_view gt, std::u32string_view hyp,
                              int64_t slack) {
    const int64_t n = int64_t(gt.size()), m = int64_t(hyp.size());
    const int64_t dlo = std::min<int64_t>(0, m - n) - slack;
    const int64_t dhi = std::max<int64_t>(0, m - n) + slack;
    const int64_t width = dhi - dlo + 1;
    std::vector<uint32_t> prev(size_t(width), kInf), cur(size_t(width), kInf);
    for (int64_t d = dlo; d <= dhi; ++d)
        if (d >= 0 && d <= m) prev[size_t(d - dlo)] = uint32_t(d);
    for (int64_t i = 1; i <= n; ++i) {
        std::fill(cur.begin(), cur.end(), kInf);
        for (int64_t d = dlo; d <= dhi; ++d) {
            int64_t j = i + d;
            if (j < 0 || j > m) continue;
            uint32_t best = kInf;
            if (j == 0) {
                best = uint32_t(i);
            } else {
                uint32_t diag = prev[size_t(d - dlo)];
                if (diag < kInf) best = diag + (gt[size_t(i - 1)] == hyp[size_t(j - 1)] ? 0 : 1);
                if (d + 1 <= dhi) best = std::min(best, prev[size_t(d + 1 - dlo)] + 1);
                if (d - 1 >= dlo) best = std::min(best, cur[size_t(d - 1 - dlo)] + 1);
            }
            cur[size_t(d - dlo)] = best;
        }
        std::swap(prev, cur);
    }
    uint32_t res = prev[size_t(m - n - dlo)];
    return res >= kInf ? uint64_t(std::max(n, m)) : res;
}

uint64_t gap_cost(std::u32string_view gt, std::u32string_view hyp,
                  const AlignDocumentOptions& opt) {
    const uint64_t n = gt.size(), m = hyp.size();
    if (n == 0) return m;
    if (m == 0) return n;
    if (n <= opt.banded_above && m <= opt.banded_above) return edit_distance(gt, hyp);
    int64_t slack = int64_t(opt.band_slack);
    int64_t width = std::llabs(int64_t(m) - int64_t(n)) + 2 * slack + 1;
    if ((int64_t(n) + 1) * width > 200'000'000) {
        // Degenerate, wildly mismatched gap; report the trivial upper bound
        // rather than burning quadratic time. Pages like this are outliers.
        return std::max(n, m);
    }
    return edit_distance_banded(gt, hyp, slack);
}

// Consumes all of hyp against a GT window whose *start* is free; returns
// the cost and the window offset where the matched region begins.
std::pair<uint64_t, uint64_t> prefix_align(std::u32string_view gt, std::u32string_view hyp) {
    const size_t n = gt.size(), m = hyp.size();
    std::vector<uint32_t> prev_c(m + 1), cur_c(m + 1);
    std::vector<uint32_t> prev_s(m + 1), cur_s(m + 1);
    for (size_t j = 0; j <= m; ++j) {
        prev_c[j] = uint32_t(j);
        prev_s[j] = 0;
    }
    for (size_t i = 1; i <= n; ++i) {
        cur_c[0] = 0; // free skip of the GT window start
        cur_s[0] = uint32_t(i);
        for (size_t j = 1; j <= m; ++j) {
            bool eq = gt[i - 1] == hyp[j - 1];
            uint32_t best = prev_c[j - 1] + (eq ? 0 : 1);
            uint32_t start = prev_s[j - 1];
            if (prev_c[j] + 1 < best) {
                best = prev_c[j] + 1;
                start = prev_s[j];
            }
            if (cur_c[j - 1] + 1 < best) {
                best = cur_c[j - 1] + 1;
                start = cur_s[j - 1];
            }
            cur_c[j] = best;
            cur_s[j] = start;
        }
        std::swap(prev_c, cur_c);
        std::swap(prev_s, cur_s);
    }
    return {prev_c[m], prev_s[m]};
}

// Consumes all of hyp from the start of a GT window whose *end* is free;
// returns the cost and how many GT chars the matched region spans.
std::pair<uint64_t, uint64_t> suffix_align(std::u32string_view gt, std::u32string_view hyp) {
    const size_t n = gt.size(), m = hyp.size();
    std::vector<uint32_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = uint32_t(j);
    uint32_t best_cost = prev[m];
    uint64_t best_end = 0;
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = uint32_t(i);
        for (size_t j = 1; j <= m; ++j) {
            uint32_t b = prev[j - 1] + (gt[i - 1] == hyp[j - 1] ? 0 : 1);
            b = std::min(b, prev[j] + 1);
            b = std::min(b, cur[j - 1] + 1);
            cur[j] = b;
        }
        if (cur[m] < best_cost) {
            best_cost = cur[m];
            best_end = i;
        }
        std::swap(prev, cur);
    }
    return {best_cost, best_end};
}

struct Word {
    std::u32string text;
    uint64_t begin = 0, end = 0;
};

std::vector<Word> words_with_offsets(std::u32string_view s) {
    std::vector<Word> words;
    size_t i = 0;
    while (i < s.size()) {
        if (is_space(s[i])) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < s.size() && !is_space(s[j])) ++j;
        words.push_back({std::u32string(s.substr(i, j - i)), i, j});
        i = j;
    }
    return words;
}

std::vector<std::u32string> segment_words(std::u32string_view s, uint64_t begin, uint64_t end) {
    std::vector<std::u32string> out;
    for (Word& w : words_with_offsets(s.substr(size_t(begin), size_t(end - begin))))
        out.push_back(std::move(w.text));
    return out;
}

struct Anchor {
    size_t gt_word = 0, hyp_word = 0;
};

std::vector<Anchor> find_anchors(const std::vector<Word>& gt_words,
                                 const std::vector<Word>& hyp_words, int n) {
    auto grams = [&](const std::vector<Word>& words) {
        std::unordered_map<std::u32string, std::pair<size_t, size_t>> map; // key -> (count, index)
        if (words.size() < size_t(n)) return map;
        for (size_t i = 0; i + size_t(n) <= words.size(); ++i) {
            std::u32string key;
            for (size_t k = 0; k < size_t(n); ++k) {
                if (k) key.push_back(U' ');
                key += words[i + k].text;
            }
            auto [it, fresh] = map.try_emplace(std::move(key), std::make_pair(size_t(0), i));
            it->second.first++;
            (void)fresh;
        }
        return map;
    };

    auto gt_map = grams(gt_words);
    auto hyp_map = grams(hyp_words);

    std::vector<Anchor> cands;
    for (const auto& [key, gv] : gt_map) {
        if (gv.first != 1) continue;
        auto it = hyp_map.find(key);
        if (it == hyp_map.end() || it->second.first != 1) continue;
        cands.push_back({gv.second, it->second.second});
    }
    std::sort(cands.begin(), cands.end(), [](const Anchor& a, const Anchor& b) {
        return a.gt_word != b.gt_word ? a.gt_word < b.gt_word : a.hyp_word < b.hyp_word;
    });

    // Longest strictly-increasing chain in hyp order.
    std::vector<size_t> tail_idx, parent(cands.size(), SIZE_MAX), tails;
    std::vector<size_t> chain;
    for (size_t i = 0; i < cands.size(); ++i) {
        size_t h = cands[i].hyp_word;
        size_t lo = 0, hi = tails.size();
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (cands[tails[mid]].hyp_word < h)
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo > 0) parent[i] = tails[lo - 1];
        if (lo == tails.size())
            tails.push_back(i);
        else
            tails[lo] = i;
    }
    if (!tails.empty()) {
        for (size_t i = tails.back(); i != SIZE_MAX; i = parent[i]) chain.push_back(i);
        std::reverse(chain.begin(), chain.end());
    }

    // Drop anchors overlapping the previous kept one on either side.
    std::vector<Anchor> out;
    for (size_t idx : chain) {
        const Anchor& a = cands[idx];
        if (!out.empty()) {
            if (a.gt_word < out.back().gt_word + size_t(n)) continue;
            if (a.hyp_word < out.back().hyp_word + size_t(n)) continue;
        }
        out.push_back(a);
    }
    return out;
}

} // namespace

std::u32string normalize_text(std::string_view utf8) {
    std::u32string s = nfc_latin(utf8_decode(utf8));
    std::u32string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char32_t c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

std::vector<std::u32string> split_words(std::u32string_view s) {
    std::vector<std::u32string> out;
    for (Word& w : words_with_offsets(s)) out.push_back(std::move(w.text));
    return out;
}

Rates error_rates(std::string_view gt_utf8, std::string_view hyp_utf8) {
    std::u32string gt = normalize_text(gt_utf8);
    std::u32string hyp = normalize_text(hyp_utf8);
    if (gt.empty()) throw std::invalid_argument("error_rates: empty ground truth");

    Rates r;
    r.char_cost = edit_distance(gt, hyp);
    r.gt_chars = gt.size();
    r.cer = double(r.char_cost) / double(r.gt_chars);

    std::vector<std::u32string> gw = split_words(gt), hw = split_words(hyp);
    r.word_cost = word_edit_distance(gw, hw);
    r.gt_words = gw.size();
    r.wer = r.gt_words ? double(r.word_cost) / double(r.gt_words) : 0.0;
    return r;
}

DocumentAlignment align_document(std::string_view gt_utf8, std::string_view hyp_utf8,
                                 const AlignDocumentOptions& opt) {
    if (opt.anchor_n < 1) throw std::invalid_argument("align_document: anchor_n must be >= 1");

    std::u32string gt = normalize_text(gt_utf8);
    std::u32string hyp = normalize_text(hyp_utf8);

    DocumentAlignment doc;
    if (hyp.empty() && gt.empty()) return doc;

    std::vector<Word> gt_words = words_with_offsets(gt);
    std::vector<Word> hyp_words = words_with_offsets(hyp);
    std::vector<Anchor> anchors = find_anchors(gt_words, hyp_words, opt.anchor_n);

    uint64_t word_cost = 0;

    if (anchors.empty()) {
        if (gt.size() <= opt.fallback_cap && hyp.size() <= opt.fallback_cap && !gt.empty()) {
            doc.matched_any = true;
            doc.total_cost = edit_distance(gt, hyp);
            doc.gt_begin = 0;
            doc.gt_end = gt.size();
            doc.matched.push_back({0, gt.size(), 0, hyp.size(), doc.total_cost});
            word_cost = word_edit_distance(split_words(gt), split_words(hyp));
        } else {
            if (!hyp.empty()) doc.unmatched_hyp.push_back({0, hyp.size()});
            return doc;
        }
    } else {
        doc.matched_any = true;
        const size_t n = size_t(opt.anchor_n);
        auto anchor_gt_begin = [&](const Anchor& a) { return gt_words[a.gt_word].begin; };
        auto anchor_gt_end = [&](const Anchor& a) { return gt_words[a.gt_word + n - 1].end; };
        auto anchor_hyp_begin = [&](const Anchor& a) { return hyp_words[a.hyp_word].begin; };
        auto anchor_hyp_end = [&](const Anchor& a) { return hyp_words[a.hyp_word + n - 1].end; };

        // Prefix: align the hyp lead against a bounded GT window with a
        // free start, so a whole-book GT does not flood the alignment.
        uint64_t gt_start = anchor_gt_begin(anchors.front());
        {
            uint64_t hb = anchor_hyp_begin(anchors.front());
            if (hb > 0) {
                if (gt_start == 0) {
                    doc.unmatched_hyp.push_back({0, hb});
                } else {
                    uint64_t win = std::min<uint64_t>(gt_start, 2 * hb + 256);
                    std::u32string_view gwin(gt.data() + gt_start - win, size_t(win));
                    std::u32string_view hseg(hyp.data(), size_t(hb));
                    auto [cost, off] = prefix_align(gwin, hseg);
                    uint64_t seg_begin = gt_start - win + off;
                    doc.matched.push_back({seg_begin, gt_start, 0, hb, cost});
                    word_cost += word_edit_distance(segment_words(gt, seg_begin, gt_start),
                                                    segment_words(hyp, 0, hb));
                    doc.total_cost += cost;
                    gt_start = seg_begin;
                }
            }
        }

        // Anchor blocks and the gaps between them.
        for (size_t a = 0; a < anchors.size(); ++a) {
            uint64_t agb = anchor_gt_begin(anchors[a]), age = anchor_gt_end(anchors[a]);
            uint64_t ahb = anchor_hyp_begin(anchors[a]), ahe = anchor_hyp_end(anchors[a]);
            doc.matched.push_back({agb, age, ahb, ahe, 0});

            if (a + 1 < anchors.size()) {
                uint64_t ngb = anchor_gt_begin(anchors[a + 1]);
                uint64_t nhb = anchor_hyp_begin(anchors[a + 1]);
                uint64_t glen = ngb - age, hlen = nhb - ahe;
                if (glen == 0 && hlen == 0) continue;
                if (glen == 0) {
                    doc.unmatched_hyp.push_back({ahe, nhb});
                    continue;
                }
                std::u32string_view gseg(gt.data() + age, size_t(glen));
                std::u32string_view hseg(hyp.data() + ahe, size_t(hlen));
                uint64_t cost = gap_cost(gseg, hseg, opt);
                doc.matched.push_back({age, ngb, ahe, nhb, cost});
                word_cost += word_edit_distance(segment_words(gt, age, ngb),
                                                segment_words(hyp, ahe, nhb));
                doc.total_cost += cost;
            }
        }

        // Suffix: free GT end.
        uint64_t gt_stop = anchor_gt_end(anchors.back());
        {
            uint64_t he = anchor_hyp_end(anchors.back());
            if (he < hyp.size()) {
                uint64_t hlen = hyp.size() - he;
                if (gt_stop >= gt.size()) {
                    doc.unmatched_hyp.push_back({he, hyp.size()});
                } else {
                    uint64_t win = std::min<uint64_t>(gt.size() - gt_stop, 2 * hlen + 256);
                    std::u32string_view gwin(gt.data() + gt_stop, size_t(win));
                    std::u32string_view hseg(hyp.data() + he, size_t(hlen));
                    auto [cost, used] = suffix_align(gwin, hseg);
                    doc.matched.push_back({gt_stop, gt_stop + used, he, hyp.size(), cost});
                    word_cost += word_edit_distance(segment_words(gt, gt_stop, gt_stop + used),
                                                    segment_words(hyp, he, hyp.size()));
                    doc.total_cost += cost;
                    gt_stop += used;
                }
            }
        }

        doc.gt_begin = gt_start;
        doc.gt_end = gt_stop;
    }

    doc.gt_chars = doc.gt_end - doc.gt_begin;
    if (doc.gt_chars > 0) doc.cer = double(doc.total_cost) / double(doc.gt_chars);

    uint64_t gt_word_count = 0;
    for (const Word& w : gt_words)
        if (w.begin >= doc.gt_begin && w.end <= doc.gt_end) ++gt_word_count;
    doc.gt_words = gt_word_count;
    doc.wer = doc.gt_words ? double(word_cost) / double(doc.gt_words) : 0.0;
    return doc;
}

PageEval evaluate_page(const std::string& page_id, std::string_view gt_utf8,
                       std::string_view hyp_utf8, const AlignDocumentOptions& opt,
                       double outlier_threshold) {
    DocumentAlignment doc = align_document(gt_utf8, hyp_utf8, opt);
    PageEval ev;
    ev.page_id = page_id;
    ev.matched = doc.matched_any;
    if (!doc.matched_any) {
        ev.cer = std::numeric_limits<double>::quiet_NaN();
        ev.wer = std::numeric_limits<double>::quiet_NaN();
        return ev;
    }
    ev.cer = doc.cer;
    ev.wer = doc.wer;
    ev.gt_length = doc.gt_chars;
    ev.outlier = ev.cer > outlier_threshold;
    return ev;
}

FilterResult filter_outliers(const std::vector<PageEval>& pages, double threshold) {
    FilterResult res;
    double cer_all = 0, wer_all = 0, cer_kept = 0, wer_kept = 0;
    for (const PageEval& p : pages) {
        bool drop = !p.matched || p.cer > threshold;
        if (p.matched) {
            cer_all += p.cer;
            wer_all += p.wer;
            ++res.stats.pages_all;
        }
        if (drop) {
            res.dropped.push_back(p);
        } else {
            res.kept.push_back(p);
            cer_kept += p.cer;
            wer_kept += p.wer;
            ++res.stats.pages_kept;
        }
    }
    if (res.stats.pages_all) {
        res.stats.mean_cer_all = cer_all / double(res.stats.pages_all);
        res.stats.mean_wer_all = wer_all / double(res.stats.pages_all);
    }
    if (res.stats.pages_kept) {
        res.stats.mean_cer_kept = cer_kept / double(res.stats.pages_kept);
        res.stats.mean_wer_kept = wer_kept / double(res.stats.pages_kept);
    }
    return res;
}

} // namespace prep::align

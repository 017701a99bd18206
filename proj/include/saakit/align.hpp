#pragma once

// Word-level scoring of speaker-attributed transcripts.
//
// Pipeline: normalize -> align_words -> agreement_matrix -> optimal_mapping.
// WDER counts only matched words (correct or substituted); the hypothesis
// speaker labels are mapped to the reference labels by the one-to-one
// assignment that maximizes the number of agreeing matched words. The number
// of matched words does not depend on the mapping, so maximizing agreement is
// the same as minimizing WDER.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saakit/error.hpp"
#include "saakit/tags.hpp"

namespace saakit {

struct NormConfig {
  bool lowercase = true;
  bool strip_punct = true;
  bool collapse_ws = true;

  static NormConfig none() { return {false, false, false}; }
};

class EmptyReferenceError : public Error {
 public:
  EmptyReferenceError() : Error("reference has no words after normalization") {}
};

namespace detail {

inline bool is_word_char(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

inline std::string strip_edges(const std::string& w) {
  std::size_t b = 0;
  std::size_t e = w.size();
  while (b < e && !is_word_char(static_cast<unsigned char>(w[b]))) ++b;
  while (e > b && !is_word_char(static_cast<unsigned char>(w[e - 1]))) --e;
  return w.substr(b, e - b);
}

}  // namespace detail

// Normalizes one token; may yield zero pieces (dropped) or, with collapse_ws,
// several pieces when the token contains internal whitespace.
inline std::vector<std::string> normalize_word(const std::string& word, const NormConfig& cfg) {
  std::vector<std::string> pieces;
  if (cfg.collapse_ws) {
    detail::split_words(word, pieces);
  } else {
    pieces.push_back(word);
  }
  std::vector<std::string> out;
  for (auto& p : pieces) {
    if (cfg.strip_punct) p = detail::strip_edges(p);
    if (cfg.lowercase) {
      for (auto& c : p) {
        if (static_cast<unsigned char>(c) < 0x80) {
          c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
      }
    }
    if (!p.empty()) out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<std::string> normalize(std::span<const std::string> words, const NormConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& w : words) {
    for (auto& p : normalize_word(w, cfg)) out.push_back(std::move(p));
  }
  return out;
}

// Same transform applied to a (word, speaker) stream, so both streams keep
// identical word sequences.
inline std::vector<WordSpeaker> normalize_pairs(std::span<const WordSpeaker> pairs,
                                                const NormConfig& cfg) {
  std::vector<WordSpeaker> out;
  for (const auto& p : pairs) {
    for (auto& w : normalize_word(p.word, cfg)) out.push_back({std::move(w), p.rel});
  }
  return out;
}

enum class EditKind { Correct, Substitute, Insert, Delete };

struct EditOp {
  EditKind kind;
  std::optional<std::size_t> ref_idx;
  std::optional<std::size_t> hyp_idx;

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

struct EditCounts {
  std::size_t correct = 0;
  std::size_t sub = 0;
  std::size_t del = 0;
  std::size_t ins = 0;

  std::size_t errors() const { return sub + del + ins; }
  std::size_t matched() const { return correct + sub; }
};

struct Alignment {
  std::vector<EditOp> ops;

  EditCounts counts() const {
    EditCounts c;
    for (const auto& op : ops) {
      switch (op.kind) {
        case EditKind::Correct: ++c.correct; break;
        case EditKind::Substitute: ++c.sub; break;
        case EditKind::Delete: ++c.del; break;
        case EditKind::Insert: ++c.ins; break;
      }
    }
    return c;
  }

  std::size_t distance() const { return counts().errors(); }
};

// Levenshtein alignment with unit costs. Among minimum-cost alignments the
// backtrace prefers the diagonal (correct/substitute), then deletion, then
// insertion, walking back from the end of both sequences.
inline Alignment align_words(std::span<const std::string> ref, std::span<const std::string> hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  const std::size_t w = m + 1;
  std::vector<std::uint32_t> d((n + 1) * w);
  for (std::size_t j = 0; j <= m; ++j) d[j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    d[i * w] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t diag = d[(i - 1) * w + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0u : 1u);
      const std::uint32_t del = d[(i - 1) * w + j] + 1;
      const std::uint32_t ins = d[i * w + j - 1] + 1;
      d[i * w + j] = std::min({diag, del, ins});
    }
  }

  Alignment al;
  al.ops.reserve(std::max(n, m));
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const std::uint32_t here = d[i * w + j];
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (here == d[(i - 1) * w + j - 1] + (same ? 0u : 1u)) {
        al.ops.push_back({same ? EditKind::Correct : EditKind::Substitute, i - 1, j - 1});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && here == d[(i - 1) * w + j] + 1) {
      al.ops.push_back({EditKind::Delete, i - 1, std::nullopt});
      --i;
      continue;
    }
    al.ops.push_back({EditKind::Insert, std::nullopt, j - 1});
    --j;
  }
  std::reverse(al.ops.begin(), al.ops.end());
  return al;
}

// (S + D + I) / n_ref. May exceed 1 when the hypothesis has many insertions.
inline double wer(const Alignment& al, std::size_t n_ref) {
  if (n_ref == 0) throw EmptyReferenceError();
  return static_cast<double>(al.distance()) / static_cast<double>(n_ref);
}

// Counts of matched words by (reference speaker, hypothesis speaker). Rows
// and columns are indexed by position in ref_labels / hyp_labels, which list
// the relative indices present in each stream in ascending order.
struct AgreementMatrix {
  std::vector<int> ref_labels;
  std::vector<int> hyp_labels;
  std::vector<std::vector<std::int64_t>> counts;  // [ref row][hyp col]

  std::size_t rows() const { return ref_labels.size(); }
  std::size_t cols() const { return hyp_labels.size(); }
  std::int64_t at(std::size_t r, std::size_t h) const { return counts[r][h]; }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& row : counts) {
      for (auto v : row) t += v;
    }
    return t;
  }

  // Builds a matrix with labels 1..rows and 1..cols.
  static AgreementMatrix from_counts(std::vector<std::vector<std::int64_t>> counts) {
    AgreementMatrix m;
    const std::size_t r = counts.size();
    const std::size_t h = r == 0 ? 0 : counts.front().size();
    for (std::size_t i = 0; i < r; ++i) {
      if (counts[i].size() != h) throw Error("ragged agreement matrix");
      m.ref_labels.push_back(static_cast<int>(i) + 1);
    }
    for (std::size_t j = 0; j < h; ++j) m.hyp_labels.push_back(static_cast<int>(j) + 1);
    m.counts = std::move(counts);
    return m;
  }
};

namespace detail {

inline std::vector<int> distinct_labels(std::span<const WordSpeaker> s) {
  std::vector<int> labels;
  for (const auto& p : s) labels.push_back(p.rel);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

inline std::size_t label_index(const std::vector<int>& labels, int rel) {
  return static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), rel) -
                                  labels.begin());
}

}  // namespace detail

inline AgreementMatrix agreement_matrix(std::span<const WordSpeaker> ref,
                                        std::span<const WordSpeaker> hyp, const Alignment& al) {
  const EditCounts c = al.counts();
  if (c.correct + c.sub + c.del != ref.size() || c.correct + c.sub + c.ins != hyp.size()) {
    throw Error("alignment does not match the word streams");
  }
  AgreementMatrix m;
  m.ref_labels = detail::distinct_labels(ref);
  m.hyp_labels = detail::distinct_labels(hyp);
  m.counts.assign(m.rows(), std::vector<std::int64_t>(m.cols(), 0));
  for (const auto& op : al.ops) {
    if (op.kind != EditKind::Correct && op.kind != EditKind::Substitute) continue;
    if (!op.ref_idx || !op.hyp_idx || *op.ref_idx >= ref.size() || *op.hyp_idx >= hyp.size()) {
      throw Error("alignment index out of range");
    }
    const auto r = detail::label_index(m.ref_labels, ref[*op.ref_idx].rel);
    const auto h = detail::label_index(m.hyp_labels, hyp[*op.hyp_idx].rel);
    ++m.counts[r][h];
  }
  return m;
}

// Alignment `al` must come from strip_tags of the same two docs.
inline AgreementMatrix agreement_matrix(const SaaDoc& ref, const SaaDoc& hyp, const Alignment& al) {
  const auto rp = word_speaker_pairs(ref);
  const auto hp = word_speaker_pairs(hyp);
  return agreement_matrix(rp, hp, al);
}

// Partial one-to-one map from hypothesis relative index to reference
// relative index.
struct SpeakerMapping {
  std::map<int, int> hyp_to_ref;
  std::int64_t agreement = 0;

  std::optional<int> ref_for(int hyp_rel) const {
    auto it = hyp_to_ref.find(hyp_rel);
    if (it == hyp_to_ref.end()) return std::nullopt;
    return it->second;
  }
};

namespace detail {

// Assignment over a square matrix of column choices. assign[h] is the row
// given to column h; rows >= real_rows and columns >= real_cols are padding.
inline SpeakerMapping mapping_from_assignment(const AgreementMatrix& m,
                                              const std::vector<std::size_t>& assign) {
  SpeakerMapping out;
  for (std::size_t h = 0; h < m.cols(); ++h) {
    const std::size_t r = assign[h];
    if (r < m.rows()) {
      out.hyp_to_ref[m.hyp_labels[h]] = m.ref_labels[r];
      out.agreement += m.counts[r][h];
    }
  }
  return out;
}

// Minimum-cost perfect assignment (Hungarian method, shortest augmenting
// paths). cost is n x n, row-major by "worker"; returns worker -> job.
inline std::vector<std::size_t> hungarian_min(const std::vector<std::vector<std::int64_t>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {};
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<std::int64_t> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      std::int64_t delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> worker_to_job(n);
  for (std::size_t j = 1; j <= n; ++j) worker_to_job[p[j] - 1] = j - 1;
  return worker_to_job;
}

// Best total weight assigning the listed columns to the listed rows.
inline std::int64_t max_weight(const std::vector<std::vector<std::int64_t>>& w,
                               const std::vector<std::size_t>& cols,
                               const std::vector<std::size_t>& rows) {
  const std::size_t k = cols.size();
  if (k == 0) return 0;
  std::vector<std::vector<std::int64_t>> cost(k, std::vector<std::int64_t>(k));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) cost[a][b] = -w[cols[a]][rows[b]];
  }
  const auto assign = hungarian_min(cost);
  std::int64_t total = 0;
  for (std::size_t a = 0; a < k; ++a) total += w[cols[a]][rows[assign[a]]];
  return total;
}

}  // namespace detail

// Maximum-agreement mapping via the Hungarian method on the zero-padded
// square matrix. Among optimal mappings the one whose per-column choice
// vector (hyp speakers in ascending order, real reference rows ascending,
// unmapped last) is lexicographically smallest is returned.
inline SpeakerMapping optimal_mapping(const AgreementMatrix& m) {
  const std::size_t R = m.rows();
  const std::size_t H = m.cols();
  if (R == 0 || H == 0) return {};
  const std::size_t n = std::max(R, H);
  // w[col][row]
  std::vector<std::vector<std::int64_t>> w(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t r = 0; r < R; ++r) w[h][r] = m.counts[r][h];
  }

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const std::int64_t best = detail::max_weight(w, all, all);

  std::vector<std::size_t> assign(n, n);
  std::vector<bool> row_used(n, false);
  std::int64_t fixed = 0;
  for (std::size_t h = 0; h < H; ++h) {
    std::vector<std::size_t> rest_cols;
    for (std::size_t c = h + 1; c < n; ++c) rest_cols.push_back(c);
    bool dummy_tried = false;
    for (std::size_t r = 0; r < n; ++r) {
      if (row_used[r]) continue;
      if (r >= R) {
        // All padding rows are interchangeable.
        if (dummy_tried) break;
        dummy_tried = true;
      }
      std::vector<std::size_t> rest_rows;
      for (std::size_t q = 0; q < n; ++q) {
        if (!row_used[q] && q != r) rest_rows.push_back(q);
      }
      if (fixed + w[h][r] + detail::max_weight(w, rest_cols, rest_rows) == best) {
        assign[h] = r;
        row_used[r] = true;
        fixed += w[h][r];
        break;
      }
    }
  }
  return detail::mapping_from_assignment(m, assign);
}

// Exhaustive search over every injective mapping that pairs
// min(rows, cols) speakers, in the same lexicographic order that
// optimal_mapping uses to break ties. Test oracle; dimensions up to 8.
inline SpeakerMapping brute_force_mapping(const AgreementMatrix& m) {
  const std::size_t R = m.rows();
  const std::size_t H = m.cols();
  if (std::max(R, H) > 8) throw Error("brute_force_mapping supports at most 8 speakers per side");
  if (R == 0 || H == 0) return {};
  const std::size_t unmapped_budget = H > R ? H - R : 0;
  const std::size_t kUnmapped = R;

  std::vector<std::size_t> current(H);
  std::vector<std::size_t> best_assign;
  std::int64_t best = -1;
  std::vector<bool> used(R, false);

  std::function<void(std::size_t, std::size_t, std::int64_t)> rec =
      [&](std::size_t h, std::size_t unmapped, std::int64_t score) {
        if (h == H) {
          if (score > best) {
            best = score;
            best_assign = current;
          }
          return;
        }
        for (std::size_t r = 0; r < R; ++r) {
          if (used[r]) continue;
          used[r] = true;
          current[h] = r;
          rec(h + 1, unmapped, score + m.counts[r][h]);
          used[r] = false;
        }
        if (unmapped < unmapped_budget) {
          current[h] = kUnmapped;
          rec(h + 1, unmapped + 1, score);
        }
      };
  rec(0, 0, 0);
  return detail::mapping_from_assignment(m, best_assign);
}

// Maps each hypothesis label to the identical reference label when present.
inline SpeakerMapping identity_mapping(const AgreementMatrix& m) {
  SpeakerMapping out;
  for (std::size_t h = 0; h < m.cols(); ++h) {
    const int label = m.hyp_labels[h];
    const auto r = detail::label_index(m.ref_labels, label);
    if (r < m.rows() && m.ref_labels[r] == label) {
      out.hyp_to_ref[label] = label;
      out.agreement += m.counts[r][h];
    }
  }
  return out;
}

using MappingSolver = std::function<SpeakerMapping(const AgreementMatrix&)>;

struct ScoreReport {
  std::size_t n_ref = 0;
  std::size_t n_hyp = 0;
  std::size_t correct = 0;
  std::size_t sub = 0;
  std::size_t del = 0;
  std::size_t ins = 0;
  std::size_t matched = 0;
  std::size_t spk_err = 0;
  double wer = 0.0;
  std::optional<double> wder;  // nullopt when no word is matched
  SpeakerMapping mapping;
};

inline ScoreReport score_pair_with(const SaaDoc& ref, const SaaDoc& hyp, const NormConfig& cfg,
                                   const MappingSolver& solver) {
  const auto rp = normalize_pairs(word_speaker_pairs(ref), cfg);
  const auto hp = normalize_pairs(word_speaker_pairs(hyp), cfg);
  if (rp.empty()) throw EmptyReferenceError();

  std::vector<std::string> rw, hw;
  rw.reserve(rp.size());
  hw.reserve(hp.size());
  for (const auto& p : rp) rw.push_back(p.word);
  for (const auto& p : hp) hw.push_back(p.word);

  const Alignment al = align_words(rw, hw);
  const AgreementMatrix m = agreement_matrix(rp, hp, al);
  const EditCounts c = al.counts();

  ScoreReport rep;
  rep.n_ref = rw.size();
  rep.n_hyp = hw.size();
  rep.correct = c.correct;
  rep.sub = c.sub;
  rep.del = c.del;
  rep.ins = c.ins;
  rep.matched = c.matched();
  rep.mapping = solver(m);
  rep.spk_err = rep.matched - static_cast<std::size_t>(rep.mapping.agreement);
  rep.wer = wer(al, rep.n_ref);
  if (rep.matched > 0) {
    rep.wder = static_cast<double>(rep.spk_err) / static_cast<double>(rep.matched);
  }
  return rep;
}

inline ScoreReport score_pair(const SaaDoc& ref, const SaaDoc& hyp, const NormConfig& cfg = {}) {
  return score_pair_with(ref, hyp, cfg, optimal_mapping);
}

}  // namespace saakit

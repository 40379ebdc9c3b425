#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "g4attn/common.hpp"
#include "g4attn/dna.hpp"

namespace g4attn {

enum class PatternClass { Standard, Bulged, Irregular, PQ };

inline const char* pattern_class_name(PatternClass c) {
  switch (c) {
    case PatternClass::Standard: return "standard";
    case PatternClass::Bulged: return "bulged";
    case PatternClass::Irregular: return "irregular";
    case PatternClass::PQ: return "pq";
  }
  return "?";
}

inline PatternClass pattern_class_from_name(std::string_view name) {
  if (name == "standard") return PatternClass::Standard;
  if (name == "bulged") return PatternClass::Bulged;
  if (name == "irregular") return PatternClass::Irregular;
  if (name == "pq") return PatternClass::PQ;
  throw ParseError("unknown pattern class: " + std::string(name));
}

// A mined putative-quadruplex match. Coordinates are on the plus-strand
// reference frame; bases are strand-oriented (what the pattern matched).
struct PqsHit {
  std::string chrom;
  int64_t start = 0;
  int64_t end = 0;
  char strand = '+';
  PatternClass pattern_class = PatternClass::Standard;
  int g_count = 0;
  std::string bases;

  int64_t length() const { return end - start; }
  bool operator==(const PqsHit&) const = default;
};

namespace detail {

// Base-class masks: bit 0=A, 1=C, 2=G, 3=T.
constexpr uint8_t kMaskG = 0x4;
constexpr uint8_t kMaskACT = 0xB;   // loop/bulge alphabet excluding G
constexpr uint8_t kMaskACGT = 0xF;  // loop alphabet including G

constexpr int kUnbounded = std::numeric_limits<int>::max() / 2;

struct Atom {
  uint8_t mask;
  int min;
  int max;
};

// Every quadruplex pattern here has the form (unit){rep_min,rep_max} tail
// where unit and tail are short runs of character classes.
struct QuadPattern {
  PatternClass cls;
  std::vector<Atom> unit;
  int rep_min;
  int rep_max;
  std::vector<Atom> tail;
};

inline int base_bit(char c) {
  switch (c) {
    case 'A': return 0x1;
    case 'C': return 0x2;
    case 'G': return 0x4;
    case 'T': return 0x8;
    default: return 0;  // N matches no class
  }
}

inline const QuadPattern& standard_pattern() {
  // (G{3,} [ACGT]{1,12}){3,} G{3,}
  static const QuadPattern p{PatternClass::Standard,
                             {{kMaskG, 3, kUnbounded}, {kMaskACGT, 1, 12}},
                             3,
                             kUnbounded,
                             {{kMaskG, 3, kUnbounded}}};
  return p;
}

inline const QuadPattern& bulged_pattern() {
  // (G [ATC]{0,1} G [ATC]{0,1} G [ACGT]{1,3}){3,} G [ATC]{0,1} G [ATC]{0,1} G
  static const QuadPattern p{
      PatternClass::Bulged,
      {{kMaskG, 1, 1},
       {kMaskACT, 0, 1},
       {kMaskG, 1, 1},
       {kMaskACT, 0, 1},
       {kMaskG, 1, 1},
       {kMaskACGT, 1, 3}},
      3,
      kUnbounded,
      {{kMaskG, 1, 1}, {kMaskACT, 0, 1}, {kMaskG, 1, 1}, {kMaskACT, 0, 1}, {kMaskG, 1, 1}}};
  return p;
}

inline const QuadPattern& irregular_pattern() {
  // (G{1,2} [ATC]{1,2}){7,} G{1,2}
  static const QuadPattern p{PatternClass::Irregular,
                             {{kMaskG, 1, 2}, {kMaskACT, 1, 2}},
                             7,
                             kUnbounded,
                             {{kMaskG, 1, 2}}};
  return p;
}

inline const QuadPattern& pq_pattern() {
  // (G{3,} [ACGT]{1,12}){3} G{3,} — the canonical four-tract motif
  static const QuadPattern p{PatternClass::PQ,
                             {{kMaskG, 3, kUnbounded}, {kMaskACGT, 1, 12}},
                             3,
                             3,
                             {{kMaskG, 3, kUnbounded}}};
  return p;
}

// Longest-match scan for one pattern over one sequence. For every start
// position the longest substring matching the pattern is found by
// propagating the set of reachable positions through the atoms; the run
// table per character class makes each atom step O(1) per position.
class PatternScanner {
public:
  PatternScanner(const QuadPattern& pattern, std::string_view seq)
      : pattern_(pattern), seq_(seq) {
    build_run_table(pattern_.unit);
    build_run_table(pattern_.tail);
  }

  // Returns the end of the longest match starting at `start`, or -1.
  int longest_match_at(int start) const {
    cur_.clear();
    cur_.push_back(start);
    collected_.clear();
    int reps = 0;
    while (!cur_.empty() && reps < pattern_.rep_max) {
      advance_atoms(pattern_.unit, cur_, next_);
      cur_.swap(next_);
      ++reps;
      if (reps >= pattern_.rep_min)
        collected_.insert(collected_.end(), cur_.begin(), cur_.end());
    }
    dedupe(collected_);
    advance_atoms(pattern_.tail, collected_, next_);
    int best = -1;
    for (const int e : next_) best = std::max(best, e);
    return best;
  }

private:
  void build_run_table(const std::vector<Atom>& atoms) {
    for (const auto& a : atoms) {
      if (runs_.count(a.mask)) continue;
      std::vector<int>& t = runs_[a.mask];
      const int n = static_cast<int>(seq_.size());
      t.assign(n + 1, 0);
      for (int i = n - 1; i >= 0; --i)
        t[i] = (base_bit(seq_[i]) & a.mask) ? t[i + 1] + 1 : 0;
    }
  }

  void advance_atoms(const std::vector<Atom>& atoms, std::vector<int>& from,
                     std::vector<int>& to) const {
    std::vector<int>* src = &from;
    std::vector<int>* dst = &to;
    for (const auto& a : atoms) {
      dst->clear();
      const auto& run = runs_.at(a.mask);
      for (const int p : *src) {
        const int avail = run[p];
        const int hi = std::min(avail, a.max);
        for (int k = a.min; k <= hi; ++k) dst->push_back(p + k);
      }
      dedupe(*dst);
      std::swap(src, dst);
    }
    if (src != &to) to = *src;
  }

  static void dedupe(std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  const QuadPattern& pattern_;
  std::string_view seq_;
  std::map<uint8_t, std::vector<int>> runs_;
  mutable std::vector<int> cur_, next_, collected_;
};

// Scans `r` in its own orientation and reports hits mapped to the
// plus-strand frame. Emits one hit per matching start position; redundancy
// is resolved later by dedupe_hits.
inline std::vector<PqsHit> scan_pattern(const DnaRecord& r, const QuadPattern& pattern,
                                        int min_g) {
  std::vector<PqsHit> hits;
  const std::string& seq = r.bases;
  const int n = static_cast<int>(seq.size());
  if (n == 0) return hits;

  PatternScanner scanner(pattern, seq);
  std::vector<int> g_prefix(n + 1, 0);
  for (int i = 0; i < n; ++i) g_prefix[i + 1] = g_prefix[i] + (seq[i] == 'G');

  for (int i = 0; i < n; ++i) {
    if (seq[i] != 'G') continue;  // all four patterns open with a guanine
    const int e = scanner.longest_match_at(i);
    if (e < 0) continue;
    const int g = g_prefix[e] - g_prefix[i];
    if (g < min_g) continue;
    PqsHit h;
    h.chrom = r.chrom;
    h.strand = r.strand;
    h.pattern_class = pattern.cls;
    h.g_count = g;
    h.bases = seq.substr(static_cast<size_t>(i), static_cast<size_t>(e - i));
    if (r.strand == '+') {
      h.start = r.start + i;
      h.end = r.start + e;
    } else {
      h.start = r.start + (n - e);
      h.end = r.start + (n - i);
    }
    hits.push_back(std::move(h));
  }
  return hits;
}

inline int class_priority(PatternClass c) {
  switch (c) {
    case PatternClass::Standard: return 0;
    case PatternClass::Bulged: return 1;
    case PatternClass::Irregular: return 2;
    case PatternClass::PQ: return 3;
  }
  return 4;
}

}  // namespace detail

// The guanine floor for three-layered quadruplexes.
constexpr int kDefaultMinGuanines = 12;

inline std::vector<PqsHit> scan_standard(const DnaRecord& r, int min_g = kDefaultMinGuanines) {
  return detail::scan_pattern(r, detail::standard_pattern(), min_g);
}

inline std::vector<PqsHit> scan_bulged(const DnaRecord& r, int min_g = kDefaultMinGuanines) {
  return detail::scan_pattern(r, detail::bulged_pattern(), min_g);
}

inline std::vector<PqsHit> scan_irregular(const DnaRecord& r, int min_g = kDefaultMinGuanines) {
  return detail::scan_pattern(r, detail::irregular_pattern(), min_g);
}

// Canonical-motif candidates used as negatives; no guanine floor beyond
// what the motif itself implies.
inline std::vector<PqsHit> scan_pq(const DnaRecord& r) {
  return detail::scan_pattern(r, detail::pq_pattern(), 0);
}

namespace detail {

inline auto dedupe_sort_key(const PqsHit& h) {
  return std::tuple<const std::string&, char, int64_t, int64_t>(h.chrom, h.strand, h.start,
                                                                -h.length());
}

}  // namespace detail

inline void sort_hits_for_dedupe(std::vector<PqsHit>& hits) {
  std::sort(hits.begin(), hits.end(), [](const PqsHit& a, const PqsHit& b) {
    return detail::dedupe_sort_key(a) < detail::dedupe_sort_key(b);
  });
}

// Collapses overlapping, nested, and bookended hits per chrom/strand. The
// longest hit wins (ties: leftmost start, then standard > bulged > irregular);
// survivors end up pairwise separated by at least one nucleotide.
inline std::vector<PqsHit> dedupe_hits(const std::vector<PqsHit>& hits) {
  for (size_t i = 1; i < hits.size(); ++i)
    if (detail::dedupe_sort_key(hits[i]) < detail::dedupe_sort_key(hits[i - 1]))
      throw ContractError("dedupe_hits: input not sorted by (chrom, strand, start, -length)");

  // Selection order within a chrom/strand group.
  std::vector<size_t> order(hits.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  using SelectKey = std::tuple<const std::string&, char, int64_t, int64_t, int>;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const auto& x = hits[a];
    const auto& y = hits[b];
    return SelectKey(x.chrom, x.strand, -x.length(), x.start,
                     detail::class_priority(x.pattern_class)) <
           SelectKey(y.chrom, y.strand, -y.length(), y.start,
                     detail::class_priority(y.pattern_class));
  });

  // Accepted intervals per (chrom, strand), keyed by start. Intervals on the
  // same key are disjoint with >=1 nt gaps, so only the two neighbours of a
  // candidate can conflict with it.
  std::map<std::pair<std::string, char>, std::map<int64_t, int64_t>> accepted;
  std::vector<char> keep(hits.size(), 0);
  for (const size_t idx : order) {
    const auto& h = hits[idx];
    auto& intervals = accepted[{h.chrom, h.strand}];
    bool conflict = false;
    auto it = intervals.lower_bound(h.start);
    if (it != intervals.end() && it->first < h.end + 1) conflict = true;  // next starts too soon
    if (it != intervals.begin()) {
      const auto& prev = *std::prev(it);
      if (prev.second + 1 > h.start) conflict = true;  // previous ends too late
    }
    if (!conflict) {
      intervals.emplace(h.start, h.end);
      keep[idx] = 1;
    }
  }

  std::vector<PqsHit> out;
  for (size_t i = 0; i < hits.size(); ++i)
    if (keep[i]) out.push_back(hits[i]);
  return out;
}

struct MineOptions {
  bool standard = true;
  bool bulged = true;
  bool irregular = true;
  int min_g = kDefaultMinGuanines;
};

// Runs the enabled scanners over both strands of every record and collapses
// redundancy. Output is sorted by (chrom, start, end, strand).
inline std::vector<PqsHit> mine_genome(const std::vector<DnaRecord>& records,
                                       const MineOptions& opt = {}) {
  std::vector<std::vector<PqsHit>> per_record(records.size());
  parallel_for(records.size(), [&](size_t i) {
    const DnaRecord& fwd = records[i];
    const DnaRecord rev = reverse_complement(fwd);
    auto& out = per_record[i];
    for (const DnaRecord* r : {&fwd, &rev}) {
      if (opt.standard) {
        auto h = scan_standard(*r, opt.min_g);
        out.insert(out.end(), h.begin(), h.end());
      }
      if (opt.bulged) {
        auto h = scan_bulged(*r, opt.min_g);
        out.insert(out.end(), h.begin(), h.end());
      }
      if (opt.irregular) {
        auto h = scan_irregular(*r, opt.min_g);
        out.insert(out.end(), h.begin(), h.end());
      }
    }
  });

  std::vector<PqsHit> all;
  for (auto& v : per_record) all.insert(all.end(), v.begin(), v.end());
  sort_hits_for_dedupe(all);
  auto kept = dedupe_hits(all);
  using OutKey = std::tuple<const std::string&, int64_t, int64_t, char, int>;
  std::sort(kept.begin(), kept.end(), [](const PqsHit& a, const PqsHit& b) {
    return OutKey(a.chrom, a.start, a.end, a.strand, detail::class_priority(a.pattern_class)) <
           OutKey(b.chrom, b.start, b.end, b.strand, detail::class_priority(b.pattern_class));
  });
  return kept;
}

// BED6 plus pattern_class and g_count columns.
inline void write_hits_bed(std::ostream& out, const std::vector<PqsHit>& hits) {
  size_t n = 0;
  for (const auto& h : hits) {
    out << h.chrom << '\t' << h.start << '\t' << h.end << '\t' << "pqs" << ++n << '\t' << 0
        << '\t' << h.strand << '\t' << pattern_class_name(h.pattern_class) << '\t' << h.g_count
        << '\n';
  }
}

// Reads BED6 or BED6+2 back into hits (bases are not stored in BED).
inline std::vector<PqsHit> parse_hits_bed(std::istream& in) {
  std::vector<PqsHit> hits;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cols = split(std::string(t), '\t');
    if (cols.size() != 6 && cols.size() != 8)
      throw ParseError("BED line " + std::to_string(line_no) + ": expected 6 or 8 columns, got " +
                       std::to_string(cols.size()));
    PqsHit h;
    h.chrom = cols[0];
    try {
      h.start = std::stoll(cols[1]);
      h.end = std::stoll(cols[2]);
    } catch (const std::exception&) {
      throw ParseError("BED line " + std::to_string(line_no) + ": non-numeric coordinate");
    }
    if (h.end <= h.start)
      throw ParseError("BED line " + std::to_string(line_no) + ": end <= start");
    if (cols[5] != "+" && cols[5] != "-")
      throw ParseError("BED line " + std::to_string(line_no) + ": bad strand");
    h.strand = cols[5][0];
    if (cols.size() == 8) {
      h.pattern_class = pattern_class_from_name(cols[6]);
      try {
        h.g_count = std::stoi(cols[7]);
      } catch (const std::exception&) {
        throw ParseError("BED line " + std::to_string(line_no) + ": non-numeric g_count");
      }
    }
    hits.push_back(std::move(h));
  }
  return hits;
}

}  // namespace g4attn

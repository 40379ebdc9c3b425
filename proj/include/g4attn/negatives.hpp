#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "g4attn/common.hpp"
#include "g4attn/dna.hpp"
#include "g4attn/pqs.hpp"
#include "g4attn/rng.hpp"

namespace g4attn {

enum class NegativeKind { Random, Dishuffle, PQ };

inline const char* negative_kind_name(NegativeKind k) {
  switch (k) {
    case NegativeKind::Random: return "random";
    case NegativeKind::Dishuffle: return "dishuffle";
    case NegativeKind::PQ: return "pq";
  }
  return "?";
}

inline NegativeKind negative_kind_from_name(std::string_view name) {
  if (name == "random") return NegativeKind::Random;
  if (name == "dishuffle") return NegativeKind::Dishuffle;
  if (name == "pq") return NegativeKind::PQ;
  throw ParseError("unknown negative kind: " + std::string(name));
}

// Per-chromosome interval set (coordinates of positives to keep out of the
// negative pool).
class IntervalSet {
public:
  void add(const std::string& chrom, int64_t start, int64_t end) {
    intervals_[chrom].emplace_back(start, end);
    dirty_ = true;
  }

  bool intersects(const std::string& chrom, int64_t start, int64_t end) const {
    if (dirty_) normalize();
    const auto it = intervals_.find(chrom);
    if (it == intervals_.end()) return false;
    const auto& v = it->second;
    auto lo = std::lower_bound(v.begin(), v.end(), std::make_pair(start, start),
                               [](const auto& a, const auto& b) { return a.first < b.first; });
    if (lo != v.end() && lo->first < end) return true;
    if (lo != v.begin() && std::prev(lo)->second > start) return true;
    return false;
  }

  bool empty() const { return intervals_.empty(); }

private:
  void normalize() const {
    for (auto& [chrom, v] : intervals_) {
      std::sort(v.begin(), v.end());
      std::vector<std::pair<int64_t, int64_t>> merged;
      for (const auto& [s, e] : v) {
        if (!merged.empty() && s <= merged.back().second)
          merged.back().second = std::max(merged.back().second, e);
        else
          merged.emplace_back(s, e);
      }
      v = std::move(merged);
    }
    dirty_ = false;
  }

  mutable std::map<std::string, std::vector<std::pair<int64_t, int64_t>>> intervals_;
  mutable bool dirty_ = false;
};

struct NegativeSpec {
  NegativeKind kind = NegativeKind::Random;
  uint64_t seed = 0;
  IntervalSet exclusion;
};

namespace detail {

inline double n_fraction(std::string_view bases) {
  if (bases.empty()) return 0.0;
  size_t n = 0;
  for (const char c : bases) n += (c == 'N');
  return static_cast<double>(n) / static_cast<double>(bases.size());
}

constexpr int kMaxSampleDraws = 10000;

}  // namespace detail

// One uniformly random genome window of the requested length that avoids the
// exclusion set and is under 10% N.
inline DnaRecord sample_random_window(const std::vector<DnaRecord>& genome, int64_t length,
                                      const IntervalSet& exclusion, Rng& rng) {
  if (length <= 0) throw ContractError("sample_random_window: length must be positive");
  std::vector<uint64_t> cumulative;  // windows available up to record i
  uint64_t total = 0;
  for (const auto& r : genome) {
    const int64_t w = r.length() - length + 1;
    total += w > 0 ? static_cast<uint64_t>(w) : 0;
    cumulative.push_back(total);
  }
  if (total == 0)
    throw DataError("sample_random_window: no record can host a window of length " +
                    std::to_string(length));

  for (int attempt = 0; attempt < detail::kMaxSampleDraws; ++attempt) {
    const uint64_t pick = uniform_index(rng, total);
    const size_t ri =
        static_cast<size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) -
                            cumulative.begin());
    const auto& rec = genome[ri];
    const uint64_t before = ri == 0 ? 0 : cumulative[ri - 1];
    const int64_t offset = static_cast<int64_t>(pick - before);
    const int64_t start = rec.start + offset;
    const int64_t end = start + length;
    if (exclusion.intersects(rec.chrom, start, end)) continue;
    const auto window = std::string_view(rec.bases).substr(static_cast<size_t>(offset),
                                                           static_cast<size_t>(length));
    if (detail::n_fraction(window) >= 0.10) continue;
    DnaRecord out;
    out.id = rec.chrom + ":" + std::to_string(start) + "-" + std::to_string(end);
    out.chrom = rec.chrom;
    out.start = start;
    out.end = end;
    out.strand = '+';
    out.bases = std::string(window);
    return out;
  }
  throw DataError("sample_random_window: no acceptable window after " +
                  std::to_string(detail::kMaxSampleDraws) + " draws");
}

inline DnaRecord sample_random(const std::vector<DnaRecord>& genome, int64_t length,
                               const NegativeSpec& spec) {
  Rng rng(spec.seed);
  return sample_random_window(genome, length, spec.exclusion, rng);
}

// Rearranges a sequence while preserving its exact multiset of overlapping
// dinucleotides (hence also length, mononucleotide counts, and endpoints).
// Draws a uniformly random Eulerian path on the dinucleotide transition
// multigraph: designate a random last out-edge per vertex until those edges
// form an arborescence into the final character, shuffle the remaining
// out-edges, then walk the graph.
inline std::string dinucleotide_shuffle(std::string_view bases, uint64_t seed) {
  if (bases.size() < 2) return std::string(bases);
  Rng rng(splitmix64(seed));

  std::array<int, 256> vertex_of;
  vertex_of.fill(-1);
  std::vector<char> chars;
  auto vertex = [&](char c) {
    auto& v = vertex_of[static_cast<unsigned char>(c)];
    if (v < 0) {
      v = static_cast<int>(chars.size());
      chars.push_back(c);
    }
    return v;
  };

  const int first = vertex(bases.front());
  for (const char c : bases) vertex(c);
  const int last = vertex(bases.back());
  const int n_vertices = static_cast<int>(chars.size());
  std::vector<std::vector<int>> out_edges(static_cast<size_t>(n_vertices));
  for (size_t i = 0; i + 1 < bases.size(); ++i)
    out_edges[static_cast<size_t>(vertex(bases[i]))].push_back(vertex(bases[i + 1]));

  // Designated last edges must chain every non-sink vertex into the sink.
  std::vector<int> last_edge(static_cast<size_t>(n_vertices), -1);
  while (true) {
    for (int v = 0; v < n_vertices; ++v) {
      const auto& e = out_edges[static_cast<size_t>(v)];
      last_edge[static_cast<size_t>(v)] =
          (v == last || e.empty()) ? -1 : e[uniform_index(rng, e.size())];
    }
    bool ok = true;
    for (int v = 0; v < n_vertices && ok; ++v) {
      if (v == last || out_edges[static_cast<size_t>(v)].empty()) continue;
      int cur = v;
      int steps = 0;
      while (cur != last && steps++ <= n_vertices) {
        cur = last_edge[static_cast<size_t>(cur)];
        if (cur < 0) break;
      }
      ok = (cur == last);
    }
    if (ok) break;  // an arborescence exists because the input itself is an Eulerian path
  }

  // Shuffle each adjacency list with the designated edge pinned to the back.
  for (int v = 0; v < n_vertices; ++v) {
    auto& e = out_edges[static_cast<size_t>(v)];
    const int pinned = last_edge[static_cast<size_t>(v)];
    if (pinned >= 0) {
      const auto it = std::find(e.begin(), e.end(), pinned);
      std::swap(*it, e.back());
      e.pop_back();
    }
    shuffle_in_place(e, rng);
    if (pinned >= 0) e.push_back(pinned);
  }

  std::string result;
  result.reserve(bases.size());
  result.push_back(chars[static_cast<size_t>(first)]);
  std::vector<size_t> next_edge(static_cast<size_t>(n_vertices), 0);
  int cur = first;
  while (next_edge[static_cast<size_t>(cur)] < out_edges[static_cast<size_t>(cur)].size()) {
    cur = out_edges[static_cast<size_t>(cur)][next_edge[static_cast<size_t>(cur)]++];
    result.push_back(chars[static_cast<size_t>(cur)]);
  }
  if (result.size() != bases.size())
    throw DataError("dinucleotide_shuffle: walk did not consume every edge");
  return result;
}

struct NegativeSetResult {
  std::vector<DnaRecord> records;
  size_t pq_shortfall = 0;  // positives left unmatched when PQ hits run out
};

// One negative per positive. Random: length-matched genome windows.
// Dishuffle: dinucleotide shuffles of the positives themselves. PQ:
// canonical-motif hits mined from the genome away from positive loci,
// sampled without replacement.
inline NegativeSetResult build_negative_set(const std::vector<DnaRecord>& positives,
                                            const std::vector<DnaRecord>& genome,
                                            const NegativeSpec& spec) {
  NegativeSetResult result;
  result.records.resize(positives.size());

  switch (spec.kind) {
    case NegativeKind::Random: {
      parallel_for(positives.size(), [&](size_t i) {
        Rng rng = split_rng(spec.seed, i);
        result.records[i] = sample_random_window(genome, positives[i].length(), spec.exclusion, rng);
        result.records[i].id = "neg_random_" + std::to_string(i + 1);
      });
      break;
    }
    case NegativeKind::Dishuffle: {
      parallel_for(positives.size(), [&](size_t i) {
        const auto& p = positives[i];
        DnaRecord r = p;
        r.id = p.id + "_dishuffle";
        r.bases = dinucleotide_shuffle(p.bases, split_rng(spec.seed, i)());
        result.records[i] = std::move(r);
      });
      break;
    }
    case NegativeKind::PQ: {
      std::vector<PqsHit> pool;
      for (const auto& rec : genome) {
        const DnaRecord rev = reverse_complement(rec);
        for (const DnaRecord* r : {&rec, &rev}) {
          auto h = scan_pq(*r);
          pool.insert(pool.end(), h.begin(), h.end());
        }
      }
      sort_hits_for_dedupe(pool);
      pool = dedupe_hits(pool);
      std::erase_if(pool, [&](const PqsHit& h) {
        return spec.exclusion.intersects(h.chrom, h.start, h.end);
      });
      Rng rng(splitmix64(spec.seed));
      shuffle_in_place(pool, rng);
      const size_t take = std::min(pool.size(), positives.size());
      result.records.resize(take);
      result.pq_shortfall = positives.size() - take;
      for (size_t i = 0; i < take; ++i) {
        const auto& h = pool[i];
        DnaRecord r;
        r.id = "neg_pq_" + std::to_string(i + 1);
        r.chrom = h.chrom;
        r.start = h.start;
        r.end = h.end;
        r.strand = h.strand;
        r.bases = h.bases;
        result.records[i] = std::move(r);
      }
      break;
    }
  }
  return result;
}

}  // namespace g4attn

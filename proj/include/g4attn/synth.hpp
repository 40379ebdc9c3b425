#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "g4attn/common.hpp"
#include "g4attn/dna.hpp"
#include "g4attn/negatives.hpp"
#include "g4attn/rng.hpp"
#include "g4attn/signal.hpp"

namespace g4attn {

// Desk-scale stand-in for experimental data: positives are random
// backgrounds with one canonical four-tract quadruplex motif implanted,
// negatives are dinucleotide shuffles of the positives. Every fifth example
// of each class is held out as test.
struct SynthCorpus {
  std::vector<DnaRecord> records;
  std::vector<LabeledExample> examples;
};

namespace detail {

constexpr int kMinMotifLength = 15;  // four G3 tracts with single-base loops

inline std::string sample_standard_motif(Rng& rng, int64_t max_length) {
  // G-run lengths 3..5, loop lengths 1..4 over all four bases
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::string motif;
    for (int tract = 0; tract < 4; ++tract) {
      const int run = 3 + static_cast<int>(uniform_index(rng, 3));
      motif.append(static_cast<size_t>(run), 'G');
      if (tract < 3) {
        const int loop = 1 + static_cast<int>(uniform_index(rng, 4));
        static const char bases[4] = {'A', 'C', 'G', 'T'};
        for (int i = 0; i < loop; ++i) motif.push_back(bases[uniform_index(rng, 4)]);
      }
    }
    if (static_cast<int64_t>(motif.size()) <= max_length) return motif;
  }
  throw DataError("synth_corpus: cannot sample a motif within the window length");
}

inline std::string random_background(Rng& rng, int64_t length) {
  static const char bases[4] = {'A', 'C', 'G', 'T'};
  std::string s;
  s.reserve(static_cast<size_t>(length));
  for (int64_t i = 0; i < length; ++i) s.push_back(bases[uniform_index(rng, 4)]);
  return s;
}

}  // namespace detail

inline SynthCorpus synth_corpus(size_t n_pos, size_t n_neg, int64_t length, uint64_t seed) {
  if (n_pos == 0 || n_neg == 0 || length <= 0)
    throw ContractError("synth_corpus: n_pos, n_neg and length must be positive");
  if (length < detail::kMinMotifLength)
    throw DataError("synth_corpus: length " + std::to_string(length) +
                    " is too short to host a quadruplex motif (needs >= " +
                    std::to_string(detail::kMinMotifLength) + ")");

  SynthCorpus corpus;
  corpus.records.reserve(n_pos + n_neg);
  corpus.examples.reserve(n_pos + n_neg);

  std::vector<std::string> positive_bases(n_pos);
  for (size_t i = 0; i < n_pos; ++i) {
    Rng rng = split_rng(seed, i);
    std::string bases = detail::random_background(rng, length);
    const std::string motif = detail::sample_standard_motif(rng, length);
    const size_t offset = uniform_index(rng, bases.size() - motif.size() + 1);
    bases.replace(offset, motif.size(), motif);
    positive_bases[i] = std::move(bases);
  }

  auto add = [&](const std::string& name, std::string bases, int label, size_t index_in_class) {
    DnaRecord r;
    r.id = name;
    r.chrom = name;
    r.start = 0;
    r.end = static_cast<int64_t>(bases.size());
    r.strand = '+';
    r.bases = std::move(bases);
    LabeledExample e;
    e.record = r;
    e.label = label;
    e.score = label == 1 ? 1.0 : 0.0;
    e.split = (index_in_class % 5 == 4) ? Split::Test : Split::Train;
    corpus.records.push_back(std::move(r));
    corpus.examples.push_back(std::move(e));
  };

  for (size_t i = 0; i < n_pos; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "synthpos%05zu", i + 1);
    add(name, positive_bases[i], 1, i);
  }
  for (size_t i = 0; i < n_neg; ++i) {
    const std::string& source = positive_bases[i % n_pos];
    const std::string shuffled = dinucleotide_shuffle(source, split_rng(seed, n_pos + i)());
    char name[32];
    std::snprintf(name, sizeof name, "synthneg%05zu", i + 1);
    add(name, shuffled, 0, i);
  }
  return corpus;
}

}  // namespace g4attn

#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "g4attn/common.hpp"

namespace g4attn {

// A named, strand-aware genomic interval with its base string. Coordinates
// are 0-based half-open on the plus-strand reference. Immutable by
// convention once built.
struct DnaRecord {
  std::string id;
  std::string chrom;
  int64_t start = 0;
  int64_t end = 0;
  char strand = '+';
  std::string bases;  // uppercase over {A,C,G,T,N}

  int64_t length() const { return end - start; }
  bool operator==(const DnaRecord&) const = default;
};

// Uppercases and maps every IUPAC ambiguity code other than A/C/G/T to N.
// Returns false for bytes that are not letters at all.
inline bool normalize_base(char in, char& out) {
  char c = in;
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  if (c < 'A' || c > 'Z') return false;
  switch (c) {
    case 'A':
    case 'C':
    case 'G':
    case 'T':
      out = c;
      return true;
    default:
      out = 'N';  // R, Y, S, W, K, M, B, D, H, V, N, U, ...
      return true;
  }
}

inline std::string normalize_bases(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (const char c : raw) {
    char b;
    if (!normalize_base(c, b)) throw ParseError(std::string("invalid base character '") + c + "'");
    out.push_back(b);
  }
  return out;
}

// FASTA reader: multi-record, arbitrary line wrapping. The record id/chrom is
// the header token up to the first whitespace.
inline std::vector<DnaRecord> parse_fasta(std::istream& in) {
  std::vector<DnaRecord> records;
  std::string line;
  size_t line_no = 0;
  bool have_record = false;
  size_t header_line = 0;
  DnaRecord current;

  auto finish = [&] {
    if (!have_record) return;
    if (current.bases.empty())
      throw ParseError("FASTA record '" + current.id + "' at line " + std::to_string(header_line) +
                       " has an empty body");
    current.end = static_cast<int64_t>(current.bases.size());
    records.push_back(std::move(current));
    current = DnaRecord{};
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    for (const char c : line)
      if (static_cast<unsigned char>(c) > 127)
        throw ParseError("non-ASCII byte at line " + std::to_string(line_no));
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '>') {
      finish();
      const auto header = trim(t.substr(1));
      if (header.empty()) throw ParseError("empty FASTA header at line " + std::to_string(line_no));
      const auto ws = header.find_first_of(" \t");
      const std::string name(ws == std::string_view::npos ? header : header.substr(0, ws));
      current.id = name;
      current.chrom = name;
      current.start = 0;
      current.strand = '+';
      have_record = true;
      header_line = line_no;
    } else {
      if (!have_record)
        throw ParseError("sequence data before any '>' header at line " + std::to_string(line_no));
      for (const char c : t) {
        char b;
        if (!normalize_base(c, b))
          throw ParseError(std::string("invalid base character '") + c + "' at line " +
                           std::to_string(line_no));
        current.bases.push_back(b);
      }
    }
  }
  finish();
  return records;
}

inline std::vector<DnaRecord> parse_fasta_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open FASTA file: " + path);
  try {
    return parse_fasta(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_fasta(std::ostream& out, const std::vector<DnaRecord>& records,
                        size_t wrap = 60) {
  for (const auto& r : records) {
    out << '>' << r.id << '\n';
    for (size_t i = 0; i < r.bases.size(); i += wrap)
      out << std::string_view(r.bases).substr(i, wrap) << '\n';
  }
}

inline char complement_base(char c) {
  switch (c) {
    case 'A': return 'T';
    case 'T': return 'A';
    case 'C': return 'G';
    case 'G': return 'C';
    default: return 'N';
  }
}

// Reverse complement: strand flips, reference coordinates stay put.
inline DnaRecord reverse_complement(const DnaRecord& r) {
  DnaRecord out = r;
  out.strand = (r.strand == '+') ? '-' : '+';
  out.bases.assign(r.bases.rbegin(), r.bases.rend());
  for (auto& c : out.bases) c = complement_base(c);
  return out;
}

// BED6: chrom, start, end, name, score, strand.
inline void write_bed6(std::ostream& out, const DnaRecord& r, std::string_view name,
                       int64_t score) {
  out << r.chrom << '\t' << r.start << '\t' << r.end << '\t' << name << '\t' << score << '\t'
      << r.strand << '\n';
}

}  // namespace g4attn

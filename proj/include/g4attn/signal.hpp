#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "g4attn/common.hpp"
#include "g4attn/dna.hpp"
#include "g4attn/pqs.hpp"

namespace g4attn {

// Continuous per-interval genomic signal, e.g. experimental quadruplex
// formation scores. Intervals are kept sorted and non-overlapping per
// chromosome.
class SignalTrack {
public:
  struct Interval {
    int64_t start;
    int64_t end;
    double value;
  };

  void add(const std::string& chrom, Interval iv) { data_[chrom].push_back(iv); }

  void validate_sorted() const {
    for (const auto& [chrom, v] : data_) {
      for (size_t i = 1; i < v.size(); ++i)
        if (v[i].start < v[i - 1].end)
          throw ParseError("overlapping intervals on " + chrom + " near " +
                           std::to_string(v[i].start));
    }
  }

  const std::vector<Interval>* chromosome(const std::string& chrom) const {
    const auto it = data_.find(chrom);
    return it == data_.end() ? nullptr : &it->second;
  }

  std::map<std::string, std::vector<Interval>>& mutable_data() { return data_; }

private:
  std::map<std::string, std::vector<Interval>> data_;
};

// bedGraph: whitespace-separated chrom/start/end/value rows; track, browser
// and comment lines are skipped.
inline SignalTrack parse_bedgraph(std::istream& in) {
  SignalTrack track;
  std::map<std::string, std::vector<std::pair<SignalTrack::Interval, size_t>>> staged;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.starts_with("track") || t.starts_with("browser")) continue;
    std::istringstream row{std::string(t)};
    std::string chrom;
    int64_t start = 0, end = 0;
    std::string value_str;
    if (!(row >> chrom >> start >> end >> value_str))
      throw ParseError("bedGraph line " + std::to_string(line_no) +
                       ": expected chrom start end value");
    if (end <= start)
      throw ParseError("bedGraph line " + std::to_string(line_no) + ": end <= start");
    double value = 0.0;
    try {
      size_t consumed = 0;
      value = std::stod(value_str, &consumed);
      if (consumed != value_str.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ParseError("bedGraph line " + std::to_string(line_no) + ": non-numeric value '" +
                       value_str + "'");
    }
    staged[chrom].push_back({{start, end, value}, line_no});
  }

  for (auto& [chrom, rows] : staged) {
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first.start < b.first.start; });
    for (size_t i = 1; i < rows.size(); ++i)
      if (rows[i].first.start < rows[i - 1].first.end)
        throw ParseError("bedGraph line " + std::to_string(rows[i].second) +
                         ": interval overlaps a previous one on " + chrom);
    for (const auto& [iv, ln] : rows) track.add(chrom, iv);
  }
  return track;
}

// Per-base mean of the signal across [start, end); bases with no covering
// interval contribute 0, and a hit with no overlap at all scores 0.0.
inline double mean_signal(const PqsHit& hit, const SignalTrack& track) {
  const auto* intervals = track.chromosome(hit.chrom);
  if (!intervals || hit.end <= hit.start) return 0.0;
  auto it = std::lower_bound(intervals->begin(), intervals->end(), hit.start,
                             [](const SignalTrack::Interval& iv, int64_t pos) {
                               return iv.end <= pos;
                             });
  double weighted = 0.0;
  for (; it != intervals->end() && it->start < hit.end; ++it) {
    const int64_t lo = std::max(it->start, hit.start);
    const int64_t hi = std::min(it->end, hit.end);
    if (hi > lo) weighted += static_cast<double>(hi - lo) * it->value;
  }
  return weighted / static_cast<double>(hit.end - hit.start);
}

enum class Split { Train, Test };

inline const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

inline Split split_from_name(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "test") return Split::Test;
  throw ParseError("unknown split: " + std::string(name));
}

// One classifier-ready example: an interval with its sequence (when known),
// continuous score, binary label, and train/test assignment.
struct LabeledExample {
  DnaRecord record;
  double score = 0.0;
  int label = 0;
  Split split = Split::Train;
};

// Marks the top `fraction` of scores positive. The threshold is the
// ceil(fraction * n)-th largest score (nearest-rank); ties at the threshold
// are all positive, and zero scores never are.
inline std::vector<LabeledExample> label_top_fraction(std::vector<LabeledExample> examples,
                                                      double fraction) {
  if (examples.empty()) throw DataError("label_top_fraction: empty input");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ContractError("label_top_fraction: fraction must be in (0, 1)");
  std::vector<double> scores;
  scores.reserve(examples.size());
  for (const auto& e : examples) scores.push_back(e.score);
  std::sort(scores.begin(), scores.end(), std::greater<>());
  const size_t k = std::min<size_t>(
      scores.size(),
      std::max<size_t>(1, static_cast<size_t>(
                              std::ceil(fraction * static_cast<double>(scores.size())))));
  const double threshold = scores[k - 1];
  for (auto& e : examples) e.label = (e.score >= threshold && e.score > 0.0) ? 1 : 0;
  return examples;
}

inline const std::set<std::string>& default_test_chromosomes() {
  static const std::set<std::string> s{"chr1", "chr3", "chr5", "chr7", "chr9"};
  return s;
}

inline const std::set<std::string>& default_train_chromosomes() {
  static const std::set<std::string> s = [] {
    std::set<std::string> t;
    for (const int c : {2, 4, 6, 8}) t.insert("chr" + std::to_string(c));
    for (int c = 10; c <= 22; ++c) t.insert("chr" + std::to_string(c));
    t.insert("chrX");
    t.insert("chrY");
    return t;
  }();
  return s;
}

struct SplitResult {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
  size_t unknown_chrom_count = 0;  // routed to train, reported as a warning
};

// Leave-chromosomes-out partition. Chromosomes in neither list land in
// train and are counted.
inline SplitResult split_by_chromosome(
    const std::vector<LabeledExample>& examples, const std::set<std::string>& test_chroms,
    const std::set<std::string>& train_chroms = default_train_chromosomes()) {
  SplitResult out;
  for (const auto& e : examples) {
    LabeledExample copy = e;
    if (test_chroms.count(e.record.chrom)) {
      copy.split = Split::Test;
      out.test.push_back(std::move(copy));
    } else {
      if (!train_chroms.count(e.record.chrom)) ++out.unknown_chrom_count;
      copy.split = Split::Train;
      out.train.push_back(std::move(copy));
    }
  }
  return out;
}

// Label table: chrom, start, end, strand, score, label, split.
inline void write_labels_tsv(std::ostream& out, const std::vector<LabeledExample>& examples) {
  out << "chrom\tstart\tend\tstrand\tscore\tlabel\tsplit\n";
  char buf[64];
  for (const auto& e : examples) {
    std::snprintf(buf, sizeof buf, "%.17g", e.score);
    out << e.record.chrom << '\t' << e.record.start << '\t' << e.record.end << '\t'
        << e.record.strand << '\t' << buf << '\t' << e.label << '\t' << split_name(e.split)
        << '\n';
  }
}

inline std::vector<LabeledExample> parse_labels_tsv(std::istream& in) {
  std::vector<LabeledExample> out;
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header_seen && t.starts_with("chrom\t")) {
      header_seen = true;
      continue;
    }
    const auto cols = split(std::string(t), '\t');
    if (cols.size() != 7)
      throw ParseError("labels TSV line " + std::to_string(line_no) + ": expected 7 columns");
    LabeledExample e;
    e.record.chrom = cols[0];
    e.record.id = cols[0];
    try {
      e.record.start = std::stoll(cols[1]);
      e.record.end = std::stoll(cols[2]);
      e.score = std::stod(cols[4]);
      e.label = std::stoi(cols[5]);
    } catch (const std::exception&) {
      throw ParseError("labels TSV line " + std::to_string(line_no) + ": bad numeric field");
    }
    if (cols[3] != "+" && cols[3] != "-")
      throw ParseError("labels TSV line " + std::to_string(line_no) + ": bad strand");
    e.record.strand = cols[3][0];
    if (e.label != 0 && e.label != 1)
      throw ParseError("labels TSV line " + std::to_string(line_no) + ": label must be 0 or 1");
    e.split = split_from_name(cols[6]);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace g4attn

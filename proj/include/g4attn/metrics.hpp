#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "g4attn/common.hpp"

namespace g4attn {

enum class CurveKind { Roc, Pr };

// An ROC or precision-recall curve with its area.
struct EvalCurve {
  CurveKind kind = CurveKind::Roc;
  std::vector<std::pair<double, double>> points;  // ROC: (FPR, TPR); PR: (recall, precision)
  double area = 0.0;
};

namespace detail {

struct RankedCounts {
  // per descending-score tie group: positives and negatives at that score
  std::vector<std::pair<size_t, size_t>> groups;
  size_t total_pos = 0;
  size_t total_neg = 0;
};

inline RankedCounts rank_by_score(const std::vector<double>& scores,
                                  const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw ContractError("metrics: scores and labels differ in length");
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  RankedCounts rc;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    size_t pos = 0, neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1)
        ++pos;
      else
        ++neg;
      ++j;
    }
    rc.groups.emplace_back(pos, neg);
    rc.total_pos += pos;
    rc.total_neg += neg;
    i = j;
  }
  return rc;
}

}  // namespace detail

// ROC curve swept over every threshold, ties handled as one group;
// trapezoidal area equals the pairwise rank statistic with ties counting
// one half.
inline EvalCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  const auto rc = detail::rank_by_score(scores, labels);
  if (rc.total_pos == 0 || rc.total_neg == 0)
    throw DataError("roc_auc: undefined metric, both classes must be present");

  EvalCurve curve;
  curve.kind = CurveKind::Roc;
  const double P = static_cast<double>(rc.total_pos);
  const double N = static_cast<double>(rc.total_neg);
  curve.points.emplace_back(0.0, 0.0);
  double tp = 0.0, fp = 0.0, area = 0.0;
  for (const auto& [pos, neg] : rc.groups) {
    const double tp2 = tp + static_cast<double>(pos);
    const double fp2 = fp + static_cast<double>(neg);
    area += (fp2 - fp) / N * (tp + tp2) / (2.0 * P);
    tp = tp2;
    fp = fp2;
    curve.points.emplace_back(fp / N, tp / P);
  }
  curve.area = area;
  return curve;
}

// Precision-recall curve with step-wise interpolation:
// area = sum over threshold groups of (R_k - R_{k-1}) * P_k.
inline EvalCurve pr_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  const auto rc = detail::rank_by_score(scores, labels);
  if (rc.total_pos == 0) throw DataError("pr_auc: undefined metric, no positive examples");

  EvalCurve curve;
  curve.kind = CurveKind::Pr;
  const double P = static_cast<double>(rc.total_pos);
  double tp = 0.0, fp = 0.0, area = 0.0, prev_recall = 0.0;
  for (const auto& [pos, neg] : rc.groups) {
    tp += static_cast<double>(pos);
    fp += static_cast<double>(neg);
    const double recall = tp / P;
    const double precision = tp / (tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    curve.points.emplace_back(recall, precision);
  }
  curve.area = area;
  return curve;
}

// Evaluation output: both curves plus confusion counts at threshold 0.5.
struct EvalReport {
  EvalCurve roc;
  EvalCurve pr;
  size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline EvalReport make_report(const std::vector<double>& scores, const std::vector<int>& labels,
                              double threshold = 0.5) {
  EvalReport r;
  r.roc = roc_auc(scores, labels);
  r.pr = pr_auc(scores, labels);
  for (size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++r.tp;
    else if (predicted && !actual) ++r.fp;
    else if (!predicted && !actual) ++r.tn;
    else ++r.fn;
  }
  return r;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// CSV layout: one row per metric (row,key,value,) and one per curve point
// (point,curve,x,y). Doubles are printed with full round-trip precision.
inline void write_report_csv(std::ostream& out, const EvalReport& r) {
  out << "row,key,x,y\n";
  out << "metric,roc_auc," << detail::format_double(r.roc.area) << ",\n";
  out << "metric,pr_auc," << detail::format_double(r.pr.area) << ",\n";
  out << "metric,tp," << r.tp << ",\n";
  out << "metric,fp," << r.fp << ",\n";
  out << "metric,tn," << r.tn << ",\n";
  out << "metric,fn," << r.fn << ",\n";
  for (const auto& [x, y] : r.roc.points)
    out << "point,roc," << detail::format_double(x) << ',' << detail::format_double(y) << '\n';
  for (const auto& [x, y] : r.pr.points)
    out << "point,pr," << detail::format_double(x) << ',' << detail::format_double(y) << '\n';
}

inline EvalReport parse_report_csv(std::istream& in) {
  EvalReport r;
  r.roc.kind = CurveKind::Roc;
  r.pr.kind = CurveKind::Pr;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t == "row,key,x,y") continue;
    const auto cols = split(std::string(t), ',');
    if (cols.size() != 4)
      throw ParseError("report CSV line " + std::to_string(line_no) + ": expected 4 columns");
    try {
      if (cols[0] == "metric") {
        if (cols[1] == "roc_auc") r.roc.area = std::stod(cols[2]);
        else if (cols[1] == "pr_auc") r.pr.area = std::stod(cols[2]);
        else if (cols[1] == "tp") r.tp = std::stoull(cols[2]);
        else if (cols[1] == "fp") r.fp = std::stoull(cols[2]);
        else if (cols[1] == "tn") r.tn = std::stoull(cols[2]);
        else if (cols[1] == "fn") r.fn = std::stoull(cols[2]);
        else throw ParseError("report CSV line " + std::to_string(line_no) + ": unknown metric");
      } else if (cols[0] == "point") {
        auto& curve = cols[1] == "roc" ? r.roc : r.pr;
        curve.points.emplace_back(std::stod(cols[2]), std::stod(cols[3]));
      } else {
        throw ParseError("report CSV line " + std::to_string(line_no) + ": unknown row type");
      }
    } catch (const std::invalid_argument&) {
      throw ParseError("report CSV line " + std::to_string(line_no) + ": bad number");
    }
  }
  return r;
}

// Two-panel SVG with the ROC and PR polylines.
inline void write_curves_svg(std::ostream& out, const EvalReport& r) {
  const double w = 320.0, h = 320.0, margin = 40.0;
  auto panel = [&](const EvalCurve& c, double x0, const char* title, const char* color) {
    auto px = [&](double v) { return x0 + margin + v * (w - 2 * margin); };
    auto py = [&](double v) { return h - margin - v * (h - 2 * margin); };
    out << "<rect x='" << x0 + margin << "' y='" << margin << "' width='" << w - 2 * margin
        << "' height='" << h - 2 * margin << "' fill='none' stroke='black'/>\n";
    out << "<text x='" << x0 + w / 2 << "' y='20' text-anchor='middle'>" << title << " area="
        << c.area << "</text>\n";
    out << "<polyline fill='none' stroke='" << color << "' points='";
    for (const auto& [x, y] : c.points) out << px(x) << ',' << py(y) << ' ';
    out << "'/>\n";
  };
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << 2 * w << "' height='" << h
      << "'>\n";
  panel(r.roc, 0.0, "ROC", "steelblue");
  panel(r.pr, w, "PR", "firebrick");
  out << "</svg>\n";
}

}  // namespace g4attn

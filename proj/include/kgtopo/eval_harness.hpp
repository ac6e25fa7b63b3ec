#pragma once

/// @file eval_harness.hpp
/// Hits@k scoring of prediction records, direct vs inverse head comparison,
/// and plain-text / CSV report rendering.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdio>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "kgtopo/error.hpp"
#include "kgtopo/predictor.hpp"
#include "kgtopo/text.hpp"

namespace kgtopo {

inline constexpr std::array<std::size_t, 3> kReportedK = {1, 3, 10};

/// Equal after trimming, collapsing inner whitespace and ASCII case-folding.
inline bool match_entity(std::string_view predicted, std::string_view gold) {
  return text::normalize_entity(predicted) == text::normalize_entity(gold);
}

inline bool hits_at_k(const PredictionRecord& r, std::size_t k) {
  if (r.error || !r.task.gold) return false;
  const std::size_t n = std::min(k, r.answer.candidates.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (match_entity(r.answer.candidates[i], *r.task.gold)) return true;
  }
  return false;
}

struct EvalRow {
  PromptVariant variant = PromptVariant::Vanilla;
  PredictionMode mode = PredictionMode::Tail;
  std::size_t n_tasks = 0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::size_t n_parse_failures = 0;
  std::size_t n_errors = 0;  // failures other than unparseable answers

  bool operator==(const EvalRow&) const = default;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  bool operator==(const EvalReport&) const = default;
};

/// One row per (variant, mode), ordered by variant then mode. Every record
/// counts in the denominator; failed records score as misses.
inline EvalReport evaluate_run(std::span<const PredictionRecord> records) {
  struct Tally {
    std::size_t n = 0, h1 = 0, h3 = 0, h10 = 0, parse = 0, errors = 0;
  };
  std::map<std::pair<PromptVariant, PredictionMode>, Tally> groups;
  for (const auto& r : records) {
    Tally& t = groups[{r.variant, r.mode}];
    ++t.n;
    t.h1 += hits_at_k(r, 1);
    t.h3 += hits_at_k(r, 3);
    t.h10 += hits_at_k(r, 10);
    if (r.error_code == Errc::ParseFailure) {
      ++t.parse;
    } else if (r.error) {
      ++t.errors;
    }
  }
  EvalReport report;
  for (const auto& [key, t] : groups) {
    const double n = static_cast<double>(t.n);
    report.rows.push_back({key.first, key.second, t.n, static_cast<double>(t.h1) / n,
                           static_cast<double>(t.h3) / n, static_cast<double>(t.h10) / n, t.parse,
                           t.errors});
  }
  return report;
}

struct HeadModeRow {
  std::size_t k = 0;
  std::size_t direct_correct = 0;
  std::size_t inverse_correct = 0;
  std::size_t both_correct = 0;
  std::size_t agreement = 0;  // tasks where both modes had the same outcome

  bool operator==(const HeadModeRow&) const = default;
};

struct HeadModeComparison {
  std::size_t n_tasks = 0;
  std::vector<HeadModeRow> rows;

  bool operator==(const HeadModeComparison&) const = default;
};

/// Pairs records by their original task (known node, relation, slot, gold).
/// TaskMismatch unless both runs cover the same multiset of tasks.
inline HeadModeComparison compare_head_modes(std::span<const PredictionRecord> direct,
                                             std::span<const PredictionRecord> inverse) {
  using Key = std::tuple<std::string, std::string, int, std::string>;
  auto key_of = [](const PredictionRecord& r) {
    return Key{r.task.known, r.task.relation, static_cast<int>(r.task.missing),
               r.task.gold.value_or("")};
  };
  std::map<Key, std::vector<const PredictionRecord*>> a, b;
  for (const auto& r : direct) a[key_of(r)].push_back(&r);
  for (const auto& r : inverse) b[key_of(r)].push_back(&r);
  if (direct.size() != inverse.size() || a.size() != b.size() ||
      !std::equal(a.begin(), a.end(), b.begin(), [](const auto& x, const auto& y) {
        return x.first == y.first && x.second.size() == y.second.size();
      })) {
    throw Error(Errc::TaskMismatch, "direct and inverse runs cover different tasks");
  }

  HeadModeComparison out;
  out.n_tasks = direct.size();
  for (std::size_t k : kReportedK) {
    HeadModeRow row;
    row.k = k;
    for (const auto& [key, recs] : a) {
      const auto& others = b.at(key);
      for (std::size_t i = 0; i < recs.size(); ++i) {
        const bool d = hits_at_k(*recs[i], k);
        const bool v = hits_at_k(*others[i], k);
        row.direct_correct += d;
        row.inverse_correct += v;
        row.both_correct += d && v;
        row.agreement += d == v;
      }
    }
    out.rows.push_back(row);
  }
  return out;
}

namespace detail {

inline std::string fixed3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

inline std::string aligned_table(const std::vector<std::vector<std::string>>& cells) {
  if (cells.empty()) return {};
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      // first column left-aligned, numbers right-aligned
      const std::string pad(width[c] - row[c].size(), ' ');
      line += c < 2 ? row[c] + pad : pad + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  };
  emit(cells.front());
  std::vector<std::string> rule;
  for (std::size_t w : width) rule.emplace_back(w, '-');
  emit(rule);
  for (std::size_t i = 1; i < cells.size(); ++i) emit(cells[i]);
  return out;
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::vector<std::string>> report_cells(const EvalReport& report) {
  std::vector<std::vector<std::string>> cells{
      {"variant", "mode", "tasks", "hits@1", "hits@3", "hits@10", "parse_failures", "errors"}};
  for (const auto& r : report.rows) {
    cells.push_back({std::string(variant_name(r.variant)), std::string(prediction_mode_name(r.mode)),
                     std::to_string(r.n_tasks), fixed3(r.hits1), fixed3(r.hits3), fixed3(r.hits10),
                     std::to_string(r.n_parse_failures), std::to_string(r.n_errors)});
  }
  return cells;
}

inline std::vector<std::vector<std::string>> comparison_cells(const HeadModeComparison& c) {
  std::vector<std::vector<std::string>> cells{
      {"k", "tasks", "direct", "inverse", "both", "agreement"}};
  for (const auto& r : c.rows) {
    cells.push_back({"hits@" + std::to_string(r.k), std::to_string(c.n_tasks),
                     std::to_string(r.direct_correct), std::to_string(r.inverse_correct),
                     std::to_string(r.both_correct), std::to_string(r.agreement)});
  }
  return cells;
}

inline std::string to_csv(const std::vector<std::vector<std::string>>& cells) {
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += ',';
      out += csv_field(row[c]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace detail

inline std::string render_report_table(const EvalReport& report) {
  return detail::aligned_table(detail::report_cells(report));
}

inline std::string render_report_csv(const EvalReport& report) {
  return detail::to_csv(detail::report_cells(report));
}

inline std::string render_comparison_table(const HeadModeComparison& c) {
  return detail::aligned_table(detail::comparison_cells(c));
}

inline std::string render_comparison_csv(const HeadModeComparison& c) {
  return detail::to_csv(detail::comparison_cells(c));
}

}  // namespace kgtopo

#include "fleetmx/seqmine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <unordered_map>

#include "fleetmx/csv.hpp"
#include "fleetmx/error.hpp"
#include "text_util.hpp"

namespace fleetmx::seqmine {

std::vector<std::string> SequenceSet::decode(const Pattern& p) const {
  std::vector<std::string> out;
  out.reserve(p.size());
  for (int idx : p) out.push_back(labels.at(static_cast<std::size_t>(idx)));
  return out;
}

std::vector<std::vector<std::string>> SequenceSet::token_sequences() const {
  std::vector<std::vector<std::string>> out;
  out.reserve(sequences.size());
  for (const auto& s : sequences) out.push_back(decode(s.events));
  return out;
}

bool job_id_less(const std::string& x, const std::string& y) {
  auto digits = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (digits(x) && digits(y)) {
    auto strip = [](const std::string& s) {
      const auto pos = s.find_first_not_of('0');
      return pos == std::string::npos ? std::string("0") : s.substr(pos);
    };
    const auto sx = strip(x), sy = strip(y);
    if (sx.size() != sy.size()) return sx.size() < sy.size();
    if (sx != sy) return sx < sy;
  }
  return x < y;
}

SequenceSet extract_sequences(const std::vector<ingest::MaintenanceRecord>& maintenance,
                              const std::vector<ingest::VehicleRecord>& vehicles) {
  std::unordered_map<std::string, const ingest::VehicleRecord*> by_unit;
  for (const auto& v : vehicles) by_unit.emplace(v.unit_no, &v);

  SequenceSet out;
  std::map<std::string, std::vector<const ingest::MaintenanceRecord*>> jobs;
  std::set<std::string> labels;
  for (const auto& r : maintenance) {
    if (!by_unit.count(r.unit_no)) {
      out.rejects.push_back({0, r.job_id, "unknown_vehicle"});
      continue;
    }
    jobs[r.unit_no].push_back(&r);
    labels.insert(ingest::normalize_system(r.system_desc));
  }
  out.labels.assign(labels.begin(), labels.end());
  std::unordered_map<std::string, int> index;
  for (std::size_t n = 0; n < out.labels.size(); ++n) index[out.labels[n]] = static_cast<int>(n);

  for (auto& [unit, list] : jobs) {
    std::sort(list.begin(), list.end(), [](const ingest::MaintenanceRecord* a, const ingest::MaintenanceRecord* b) {
      if (a->job_open_date != b->job_open_date) return a->job_open_date < b->job_open_date;
      return job_id_less(a->job_id, b->job_id);
    });
    EventSequence seq;
    seq.unit_no = unit;
    seq.make_model = by_unit.at(unit)->make_model();
    for (const auto* r : list) seq.events.push_back(index.at(ingest::normalize_system(r->system_desc)));
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

std::size_t count_windows(const std::vector<EventSequence>& seqs, std::size_t length) {
  require(length >= 1, ErrorCategory::kInvalidArgument, "window length must be >= 1");
  std::size_t n = 0;
  for (const auto& s : seqs)
    if (s.events.size() >= length) n += s.events.size() - length + 1;
  return n;
}

std::vector<PatternCount> mine_frequent(const std::vector<EventSequence>& seqs, std::size_t min_len,
                                        std::size_t max_len, std::size_t top_n) {
  require(min_len >= 1, ErrorCategory::kInvalidArgument, "min_len must be >= 1");
  require(max_len >= min_len, ErrorCategory::kInvalidArgument, "max_len must be >= min_len");
  require(top_n >= 1, ErrorCategory::kInvalidArgument, "top_n must be >= 1");
  std::map<Pattern, std::size_t> counts;
  for (const auto& s : seqs) {
    const auto& ev = s.events;
    for (std::size_t start = 0; start < ev.size(); ++start)
      for (std::size_t len = min_len; len <= max_len && start + len <= ev.size(); ++len)
        ++counts[Pattern(ev.begin() + static_cast<std::ptrdiff_t>(start),
                         ev.begin() + static_cast<std::ptrdiff_t>(start + len))];
  }
  std::vector<PatternCount> all;
  all.reserve(counts.size());
  for (auto& [p, c] : counts) all.push_back({p, c});
  // counts is already in lexicographic order, so a stable sort on count
  // leaves ties lexicographic.
  std::stable_sort(all.begin(), all.end(), [](const PatternCount& a, const PatternCount& b) { return a.count > b.count; });
  if (all.size() > top_n) all.resize(top_n);
  return all;
}

std::size_t count_occurrences(const std::vector<EventSequence>& seqs, const Pattern& pattern) {
  if (pattern.empty()) return 0;
  std::size_t n = 0;
  for (const auto& s : seqs) {
    const auto& ev = s.events;
    if (ev.size() < pattern.size()) continue;
    for (std::size_t start = 0; start + pattern.size() <= ev.size(); ++start)
      if (std::equal(pattern.begin(), pattern.end(), ev.begin() + static_cast<std::ptrdiff_t>(start))) ++n;
  }
  return n;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

ZTest two_prop_z(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2) {
  require(n1 > 0 && n2 > 0, ErrorCategory::kInvalidArgument, "two_prop_z: group sizes must be positive");
  require(x1 <= n1 && x2 <= n2, ErrorCategory::kInvalidArgument, "two_prop_z: successes exceed group size");
  const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2);
  const double p1 = static_cast<double>(x1) / dn1;
  const double p2 = static_cast<double>(x2) / dn2;
  const double pooled = static_cast<double>(x1 + x2) / (dn1 + dn2);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / dn1 + 1.0 / dn2));
  if (!(se > 0.0)) return {0.0, 1.0};
  const double z = (p1 - p2) / se;
  // Two-sided tail, computed from |z| so the tail keeps full precision.
  const double p = std::erfc(std::abs(z) / std::numbers::sqrt2);
  return {z, std::min(1.0, p)};
}

std::vector<DiffPattern> differential(const std::vector<EventSequence>& seqs, const std::string& target_make_model,
                                      const DiffOptions& opts) {
  std::vector<EventSequence> left, right;
  for (const auto& s : seqs) (s.make_model == target_make_model ? left : right).push_back(s);
  require(!left.empty(), ErrorCategory::kData, "no vehicles of make/model '" + target_make_model + "'");
  require(!right.empty(), ErrorCategory::kData, "no vehicles outside '" + target_make_model + "' to compare against");

  const auto frequent = mine_frequent(left, opts.min_len, opts.max_len, opts.top_n);
  std::vector<DiffPattern> out;
  out.reserve(frequent.size());
  for (const auto& pc : frequent) {
    DiffPattern d;
    d.pattern = pc.pattern;
    d.left_support = pc.count;
    d.left_windows = count_windows(left, pc.pattern.size());
    d.right_support = count_occurrences(right, pc.pattern);
    d.right_windows = count_windows(right, pc.pattern.size());
    d.left_norm = static_cast<double>(d.left_support) / static_cast<double>(d.left_windows);
    d.right_norm = d.right_windows ? static_cast<double>(d.right_support) / static_cast<double>(d.right_windows) : 0.0;
    d.i_ratio = d.right_norm > 0.0 ? d.left_norm / d.right_norm : kIRatioCap;
    if (d.right_windows > 0) {
      const auto zt = two_prop_z(d.left_support, d.left_windows, d.right_support, d.right_windows);
      d.z = zt.z;
      d.p = zt.p;
    }
    out.push_back(std::move(d));
  }
  for (auto& d : out) d.p_bonferroni = std::min(1.0, d.p * static_cast<double>(out.size()));
  std::stable_sort(out.begin(), out.end(), [](const DiffPattern& a, const DiffPattern& b) {
    if (a.left_support != b.left_support) return a.left_support > b.left_support;
    return a.pattern < b.pattern;
  });
  return out;
}

std::string format_pattern(const Pattern& p, const std::vector<std::string>& labels) {
  std::string out = "(";
  for (std::size_t n = 0; n < p.size(); ++n) {
    if (n) out += ", ";
    const auto idx = static_cast<std::size_t>(p[n]);
    out += idx < labels.size() ? labels[idx] : std::to_string(p[n]);
  }
  return out + ")";
}

std::string format_p(double p) { return p < 0.0001 ? "< 0.0001" : detail::fixed(p, 4); }

std::string format_i_ratio(double r) { return r == kIRatioCap ? "10000.0" : detail::fixed(r, 2); }

void write_table_csv(std::ostream& out, const std::vector<DiffPattern>& rows, const std::vector<std::string>& labels,
                     bool bonferroni) {
  std::vector<std::string> header = {"pattern", "left_support", "left_norm", "right_support",
                                     "right_norm", "i_ratio", "z", "p"};
  if (bonferroni) header.push_back("p_bonferroni");
  csv::write_row(out, header);
  for (const auto& d : rows) {
    std::vector<std::string> fields = {format_pattern(d.pattern, labels),
                                       std::to_string(d.left_support),
                                       detail::fixed(d.left_norm, 4),
                                       std::to_string(d.right_support),
                                       detail::fixed(d.right_norm, 4),
                                       format_i_ratio(d.i_ratio),
                                       detail::fixed(d.z, 1),
                                       format_p(d.p)};
    if (bonferroni) fields.push_back(format_p(d.p_bonferroni));
    csv::write_row(out, fields);
  }
}

}  // namespace fleetmx::seqmine

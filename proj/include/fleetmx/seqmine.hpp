#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "fleetmx/ingest.hpp"

namespace fleetmx::seqmine {

using Pattern = std::vector<int>;

/// Ordered system-repair history of one vehicle; events index into the
/// owning SequenceSet's label table.
struct EventSequence {
  std::string unit_no;
  std::string make_model;
  std::vector<int> events;
};

struct SequenceSet {
  std::vector<std::string> labels;  // sorted, unique normalized system labels
  std::vector<EventSequence> sequences;
  std::vector<ingest::Reject> rejects;

  std::vector<std::string> decode(const Pattern& p) const;
  std::vector<std::vector<std::string>> token_sequences() const;
};

/// Numeric-aware job-id ordering: all-digit ids compare as integers.
bool job_id_less(const std::string& x, const std::string& y);

/// One sequence per vehicle with at least one job, events ordered by
/// (job open date/time, job id). Vehicles appear in unit-number order.
SequenceSet extract_sequences(const std::vector<ingest::MaintenanceRecord>& maintenance,
                              const std::vector<ingest::VehicleRecord>& vehicles);

/// Number of contiguous windows of the given length.
std::size_t count_windows(const std::vector<EventSequence>& seqs, std::size_t length);

struct PatternCount {
  Pattern pattern;
  std::size_t count = 0;
};

/// Occurrence counts of every contiguous pattern with length in
/// [min_len, max_len]; top_n by count, ties broken lexicographically.
std::vector<PatternCount> mine_frequent(const std::vector<EventSequence>& seqs, std::size_t min_len,
                                        std::size_t max_len, std::size_t top_n);

/// Occurrences of one pattern across all windows.
std::size_t count_occurrences(const std::vector<EventSequence>& seqs, const Pattern& pattern);

/// Standard normal CDF.
double normal_cdf(double z);

struct ZTest {
  double z = 0.0;
  double p = 1.0;
};

/// Pooled two-proportion z-test, z = (x1/n1 − x2/n2) / SE, two-sided p.
ZTest two_prop_z(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2);

inline constexpr double kIRatioCap = 10000.0;

struct DiffPattern {
  Pattern pattern;
  std::size_t left_support = 0;
  std::size_t left_windows = 0;
  double left_norm = 0.0;
  std::size_t right_support = 0;
  std::size_t right_windows = 0;
  double right_norm = 0.0;
  double i_ratio = 0.0;
  double z = 0.0;
  double p = 1.0;
  double p_bonferroni = 1.0;
};

struct DiffOptions {
  std::size_t min_len = 3;
  std::size_t max_len = 4;
  std::size_t top_n = 8;
};

/// Target make/model (left) against every other make/model (right).
std::vector<DiffPattern> differential(const std::vector<EventSequence>& seqs, const std::string& target_make_model,
                                      const DiffOptions& opts = {});

// CSV columns: pattern,left_support,left_norm,right_support,right_norm,
// i_ratio,z,p[,p_bonferroni]. Norms use 4 decimals, i-ratio 2 (the cap is
// printed as 10000.0), z 1, p 4 or "< 0.0001".
void write_table_csv(std::ostream& out, const std::vector<DiffPattern>& rows,
                     const std::vector<std::string>& labels, bool bonferroni = false);

std::string format_pattern(const Pattern& p, const std::vector<std::string>& labels);
std::string format_p(double p);
std::string format_i_ratio(double r);

}  // namespace fleetmx::seqmine

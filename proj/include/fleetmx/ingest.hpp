#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fleetmx/tensor.hpp"

namespace fleetmx::ingest {

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;
  int seconds = 0;  // time of day, 0 when the source had no time part

  auto operator<=>(const Date&) const = default;
};

int days_in_month(int year, int month);
/// Accepts "YYYY-MM-DD" and "YYYY-MM-DD HH:MM:SS" only.
std::optional<Date> parse_date(std::string_view text);
/// "YYYY-MM-DD", plus " HH:MM:SS" when seconds is non-zero.
std::string format_date(const Date& d);

/// "$20,456" → 20456. Empty or malformed text yields nullopt.
std::optional<double> parse_currency(std::string_view text);

/// Trimmed, whitespace-collapsed, upper-cased label used as the system key.
std::string normalize_system(std::string_view raw);
/// "MAKE MODEL" key with the same normalization.
std::string make_model_key(std::string_view make, std::string_view model);

struct VehicleRecord {
  std::string unit_no;
  std::string dept_code;
  std::string make;
  std::string model;
  int model_year = 0;
  std::optional<double> purchase_cost;
  std::optional<char> status_code;  // 'A' active, 'S' disposed
  /// Remaining vehicles-table columns by header name, verbatim.
  std::map<std::string, std::string> extra;

  std::string make_model() const { return make_model_key(make, model); }
};

struct MaintenanceRecord {
  std::string job_id;
  std::string unit_no;
  std::optional<Date> wo_open_date;
  Date job_open_date;
  std::optional<Date> job_completed_date;
  std::string system_desc;  // trimmed source text
  std::optional<std::string> job_reason;
  std::optional<std::string> job_code;
  std::optional<double> labor_hours;
  std::optional<double> actual_labor_cost;
  std::optional<double> commercial_cost;
  std::optional<double> part_cost;
  std::map<std::string, std::string> extra;
};

struct Reject {
  std::size_t line = 0;
  std::string id;
  std::string reason;
};

struct MaintenanceTable {
  std::vector<MaintenanceRecord> records;
  std::vector<Reject> rejects;
};

namespace columns {
// Vehicles table.
inline constexpr std::string_view kUnit = "Unit#";
inline constexpr std::string_view kDept = "Dept#";
inline constexpr std::string_view kMake = "Make";
inline constexpr std::string_view kModel = "Model";
inline constexpr std::string_view kYear = "Year";
inline constexpr std::string_view kPurchaseCost = "Purchase Cost";
inline constexpr std::string_view kStatusCode = "Status Code";
// Maintenance table.
inline constexpr std::string_view kJobId = "Job ID";
inline constexpr std::string_view kUnitNo = "Unit No";
inline constexpr std::string_view kWoOpenDate = "WO Open Date";
inline constexpr std::string_view kJobOpenDate = "Job Open Date";
inline constexpr std::string_view kJobCompletedDate = "Job Completed Date";
inline constexpr std::string_view kJobReason = "Job Reason";
inline constexpr std::string_view kJobCode = "Job Code";
inline constexpr std::string_view kLaborHours = "Labor Hours";
inline constexpr std::string_view kActualLaborCost = "Actual Labor Cost";
inline constexpr std::string_view kCommercialCost = "Commercial Cost";
inline constexpr std::string_view kPartCost = "Part Cost";
inline constexpr std::string_view kSystemDesc = "System Description";
}  // namespace columns

/// Full vehicles-table header in source order.
const std::vector<std::string>& vehicle_header();
/// Full maintenance-table header in source order.
const std::vector<std::string>& maintenance_header();

std::vector<VehicleRecord> parse_vehicles(std::istream& in);
std::vector<VehicleRecord> parse_vehicles(const std::string& path);
MaintenanceTable parse_maintenance(std::istream& in);
MaintenanceTable parse_maintenance(const std::string& path);

enum class TimeMode { kAbsolute, kLifetime };
enum class Granularity { kMonth, kYear };

struct YearMonth {
  int year = 0;
  int month = 1;
  auto operator<=>(const YearMonth&) const = default;
  int index() const { return year * 12 + (month - 1); }
};

std::optional<YearMonth> parse_year_month(std::string_view text);  // "YYYY-MM"

struct TensorizeSpec {
  TimeMode time_mode = TimeMode::kAbsolute;
  Granularity granularity = Granularity::kMonth;
  YearMonth window_start{2010, 1};
  std::optional<YearMonth> window_end;  // nullopt: latest job month in the data
  int horizon_years = 8;
  int purchase_year_floor = 2010;
};

void validate(const TensorizeSpec& spec);

/// Jobs that reached the parser but not the tensor, by reason.
struct DiscardSummary {
  std::size_t accepted_records = 0;
  std::size_t counted = 0;
  std::map<std::string, std::size_t> discarded;
  std::map<std::string, std::size_t> parse_rejects;

  std::size_t total_discarded() const;
  std::string to_json() const;
};

struct TensorBuild {
  tensor::Tensor3 tensor;
  DiscardSummary discards;
};

/// Count tensor (vehicle × system × time bucket). Vehicles are those at or
/// above the purchase-year floor with at least one counted job, sorted by
/// (model year, unit number); systems are sorted normalized labels.
TensorBuild build_tensor(const std::vector<VehicleRecord>& vehicles,
                         const std::vector<MaintenanceRecord>& maintenance, const TensorizeSpec& spec);

}  // namespace fleetmx::ingest

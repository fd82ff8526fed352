#include "fleetmx/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "fleetmx/csv.hpp"
#include "fleetmx/error.hpp"
#include "text_util.hpp"

namespace fleetmx::ingest {

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int digits_value(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// Column lookup that fails with the full list of missing mandatory names.
struct ColumnMap {
  const csv::Table& table;

  std::vector<std::size_t> mandatory(std::initializer_list<std::string_view> names, const char* what) const {
    std::vector<std::size_t> out;
    std::string missing;
    for (auto name : names) {
      auto c = table.column(name);
      if (!c) {
        missing += missing.empty() ? "" : ", ";
        missing += name;
      } else {
        out.push_back(*c);
      }
    }
    require(missing.empty(), ErrorCategory::kParse, std::string(what) + " table is missing mandatory column(s): " + missing);
    return out;
  }

  std::optional<std::size_t> optional(std::string_view name) const { return table.column(name); }
};

std::string_view cell(const csv::Row& row, std::optional<std::size_t> col) {
  if (!col || *col >= row.fields.size()) return {};
  return detail::trim(row.fields[*col]);
}

void check_duplicates(const std::vector<std::string>& ids, const char* what) {
  std::map<std::string, int> counts;
  for (const auto& id : ids) ++counts[id];
  std::string dups;
  for (const auto& [id, n] : counts)
    if (n > 1) {
      dups += dups.empty() ? "" : ", ";
      dups += id + " (x" + std::to_string(n) + ")";
    }
  require(dups.empty(), ErrorCategory::kData, std::string("duplicate ") + what + ": " + dups);
}

}  // namespace

int days_in_month(int year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12) return 0;
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  return month == 2 && leap ? 29 : kDays[month - 1];
}

std::optional<Date> parse_date(std::string_view text) {
  text = detail::trim(text);
  if (text.size() != 10 && text.size() != 19) return std::nullopt;
  if (text[4] != '-' || text[7] != '-') return std::nullopt;
  const auto y = text.substr(0, 4), m = text.substr(5, 2), d = text.substr(8, 2);
  if (!all_digits(y) || !all_digits(m) || !all_digits(d)) return std::nullopt;
  Date out{digits_value(y), digits_value(m), digits_value(d), 0};
  if (out.month < 1 || out.month > 12 || out.day < 1 || out.day > days_in_month(out.year, out.month))
    return std::nullopt;
  if (text.size() == 19) {
    if (text[10] != ' ' || text[13] != ':' || text[16] != ':') return std::nullopt;
    const auto hh = text.substr(11, 2), mi = text.substr(14, 2), ss = text.substr(17, 2);
    if (!all_digits(hh) || !all_digits(mi) || !all_digits(ss)) return std::nullopt;
    const int h = digits_value(hh), mn = digits_value(mi), s = digits_value(ss);
    if (h > 23 || mn > 59 || s > 59) return std::nullopt;
    out.seconds = h * 3600 + mn * 60 + s;
  }
  return out;
}

std::string format_date(const Date& d) {
  char buf[32];
  if (d.seconds == 0) {
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  } else {
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d", d.year, d.month, d.day, d.seconds / 3600,
                  d.seconds / 60 % 60, d.seconds % 60);
  }
  return buf;
}

std::optional<double> parse_currency(std::string_view text) {
  std::string cleaned;
  for (char c : detail::trim(text))
    if (c != '$' && c != ',' && c != ' ') cleaned += c;
  if (cleaned.empty()) return std::nullopt;
  return detail::parse_double(cleaned);
}

std::string normalize_system(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (char c : detail::trim(raw)) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string make_model_key(std::string_view make, std::string_view model) {
  return normalize_system(make) + " " + normalize_system(model);
}

const std::vector<std::string>& vehicle_header() {
  static const std::vector<std::string> kHeader = {
      "Unit#",       "Dept#",       "Dept Desc",   "Make",        "Model",
      "Year",        "Last Meter",  "Last Fuel Date", "Purchase Cost", "Status Code",
      "Status Desc", "LTD Maintenance Cost", "LTD Fuel Cost", "LTD Fuel Gallons"};
  return kHeader;
}

const std::vector<std::string>& maintenance_header() {
  static const std::vector<std::string> kHeader = {
      "Job ID",          "Year WO Completed", "Unit No",         "Work Order No",      "WO Open Date",
      "WO Completed Date", "Work Order Location", "Job Open Date", "Job Reason",         "Job Reason Desc",
      "Job Open Date2",  "Job Completed Date", "Job Code",        "Job Description",    "Labor Hours",
      "Actual Labor Cost", "Commercial Cost",  "Part Cost",       "Primary Meter",      "Job Status",
      "Job WAC",         "WACDescription",    "Job System",      "System Description", "Job Location"};
  return kHeader;
}

std::vector<VehicleRecord> parse_vehicles(std::istream& in) {
  const csv::Table table = csv::read(in);
  const ColumnMap cols{table};
  const auto mand = cols.mandatory({columns::kUnit, columns::kMake, columns::kModel, columns::kYear}, "vehicles");
  const std::size_t c_unit = mand[0], c_make = mand[1], c_model = mand[2], c_year = mand[3];
  const auto c_dept = cols.optional(columns::kDept);
  const auto c_cost = cols.optional(columns::kPurchaseCost);
  const auto c_status = cols.optional(columns::kStatusCode);
  const std::set<std::size_t> typed = [&] {
    std::set<std::size_t> s{c_unit, c_make, c_model, c_year};
    for (auto c : {c_dept, c_cost, c_status})
      if (c) s.insert(*c);
    return s;
  }();

  std::vector<VehicleRecord> out;
  std::vector<std::string> ids;
  for (const auto& row : table.rows) {
    const std::string where = "vehicles row at line " + std::to_string(row.line);
    VehicleRecord v;
    v.unit_no = std::string(cell(row, c_unit));
    require(!v.unit_no.empty(), ErrorCategory::kParse, where + ": missing Unit#");
    v.make = std::string(cell(row, c_make));
    v.model = std::string(cell(row, c_model));
    require(!v.make.empty() && !v.model.empty(), ErrorCategory::kParse,
            where + " (unit " + v.unit_no + "): missing Make or Model");
    const auto year = detail::parse_int(cell(row, c_year));
    require(year && *year >= 1900 && *year <= 2100, ErrorCategory::kParse,
            where + " (unit " + v.unit_no + "): Year must be an integer in [1900, 2100]");
    v.model_year = static_cast<int>(*year);
    v.dept_code = std::string(cell(row, c_dept));
    v.purchase_cost = parse_currency(cell(row, c_cost));
    const auto status = upper(cell(row, c_status));
    if (status == "A" || status == "S") v.status_code = status[0];
    for (std::size_t c = 0; c < table.header.size(); ++c)
      if (!typed.count(c)) v.extra[table.header[c]] = std::string(cell(row, c));
    ids.push_back(v.unit_no);
    out.push_back(std::move(v));
  }
  check_duplicates(ids, "Unit# values in vehicles table");
  return out;
}

std::vector<VehicleRecord> parse_vehicles(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot open vehicles file '" + path + "'");
  return parse_vehicles(in);
}

MaintenanceTable parse_maintenance(std::istream& in) {
  const csv::Table table = csv::read(in);
  const ColumnMap cols{table};
  const auto mand = cols.mandatory({columns::kJobId, columns::kUnitNo, columns::kJobOpenDate, columns::kSystemDesc},
                                   "maintenance");
  const std::size_t c_job = mand[0], c_unit = mand[1], c_open = mand[2], c_sys = mand[3];
  const auto c_wo_open = cols.optional(columns::kWoOpenDate);
  const auto c_done = cols.optional(columns::kJobCompletedDate);
  const auto c_reason = cols.optional(columns::kJobReason);
  const auto c_code = cols.optional(columns::kJobCode);
  const auto c_hours = cols.optional(columns::kLaborHours);
  const auto c_labor = cols.optional(columns::kActualLaborCost);
  const auto c_comm = cols.optional(columns::kCommercialCost);
  const auto c_part = cols.optional(columns::kPartCost);
  std::set<std::size_t> typed{c_job, c_unit, c_open, c_sys};
  for (auto c : {c_wo_open, c_done, c_reason, c_code, c_hours, c_labor, c_comm, c_part})
    if (c) typed.insert(*c);

  MaintenanceTable out;
  std::vector<std::string> ids;
  for (const auto& row : table.rows) {
    MaintenanceRecord r;
    r.job_id = std::string(cell(row, c_job));
    r.unit_no = std::string(cell(row, c_unit));
    r.system_desc = std::string(cell(row, c_sys));
    auto reject = [&](std::string reason) { out.rejects.push_back({row.line, r.job_id, std::move(reason)}); };
    if (r.job_id.empty()) {
      reject("missing_job_id");
      continue;
    }
    if (r.unit_no.empty()) {
      reject("missing_unit_no");
      continue;
    }
    const auto open = parse_date(cell(row, c_open));
    if (!open) {
      reject("bad_job_open_date");
      continue;
    }
    if (normalize_system(r.system_desc).empty()) {
      reject("missing_system_description");
      continue;
    }
    r.job_open_date = *open;
    r.wo_open_date = parse_date(cell(row, c_wo_open));
    r.job_completed_date = parse_date(cell(row, c_done));
    if (auto s = cell(row, c_reason); !s.empty()) r.job_reason = std::string(s);
    if (auto s = cell(row, c_code); !s.empty()) r.job_code = std::string(s);
    r.labor_hours = detail::parse_double(cell(row, c_hours));
    r.actual_labor_cost = parse_currency(cell(row, c_labor));
    r.commercial_cost = parse_currency(cell(row, c_comm));
    r.part_cost = parse_currency(cell(row, c_part));
    for (std::size_t c = 0; c < table.header.size(); ++c)
      if (!typed.count(c)) r.extra[table.header[c]] = std::string(cell(row, c));
    ids.push_back(r.job_id);
    out.records.push_back(std::move(r));
  }
  check_duplicates(ids, "Job ID values in maintenance table");
  return out;
}

MaintenanceTable parse_maintenance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot open maintenance file '" + path + "'");
  return parse_maintenance(in);
}

std::optional<YearMonth> parse_year_month(std::string_view text) {
  text = detail::trim(text);
  if (text.size() != 7 || text[4] != '-') return std::nullopt;
  const auto y = text.substr(0, 4), m = text.substr(5, 2);
  if (!all_digits(y) || !all_digits(m)) return std::nullopt;
  YearMonth out{digits_value(y), digits_value(m)};
  if (out.month < 1 || out.month > 12) return std::nullopt;
  return out;
}

void validate(const TensorizeSpec& spec) {
  require(spec.horizon_years >= 1, ErrorCategory::kInvalidArgument, "lifetime horizon must be >= 1 year");
  if (spec.window_end)
    require(spec.window_start < *spec.window_end, ErrorCategory::kInvalidArgument,
            "window start must precede window end");
  require(!(spec.time_mode == TimeMode::kLifetime && spec.granularity == Granularity::kMonth),
          ErrorCategory::kInvalidArgument,
          "lifetime framing is yearly (purchase month is not recorded); use granularity=year");
}

std::size_t DiscardSummary::total_discarded() const {
  std::size_t n = 0;
  for (const auto& [reason, count] : discarded) n += count;
  return n;
}

std::string DiscardSummary::to_json() const {
  nlohmann::ordered_json j;
  j["accepted_records"] = accepted_records;
  j["counted"] = counted;
  j["discarded_total"] = total_discarded();
  j["discarded"] = nlohmann::ordered_json::object();
  for (const auto& [reason, count] : discarded) j["discarded"][reason] = count;
  j["parse_rejects"] = nlohmann::ordered_json::object();
  for (const auto& [reason, count] : parse_rejects) j["parse_rejects"][reason] = count;
  return j.dump(2) + "\n";
}

TensorBuild build_tensor(const std::vector<VehicleRecord>& vehicles,
                         const std::vector<MaintenanceRecord>& maintenance, const TensorizeSpec& spec) {
  validate(spec);
  std::unordered_map<std::string, const VehicleRecord*> by_unit;
  for (const auto& v : vehicles) by_unit.emplace(v.unit_no, &v);

  const bool lifetime = spec.time_mode == TimeMode::kLifetime;
  const bool yearly = spec.granularity == Granularity::kYear;

  YearMonth end{0, 1};
  if (spec.window_end) {
    end = *spec.window_end;
  } else {
    for (const auto& r : maintenance) end = std::max(end, YearMonth{r.job_open_date.year, r.job_open_date.month});
  }
  if (!lifetime)
    require(spec.window_start < end || spec.window_end.has_value(), ErrorCategory::kData,
            "latest job month precedes the window start");

  // Bucket count and labels.
  std::vector<std::string> time_labels;
  if (lifetime) {
    for (int y = 0; y < spec.horizon_years; ++y) time_labels.push_back("Y" + std::to_string(y));
  } else if (yearly) {
    for (int y = spec.window_start.year; y <= end.year; ++y) time_labels.push_back(std::to_string(y));
  } else {
    for (int idx = spec.window_start.index(); idx <= end.index(); ++idx) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%04d-%02d", idx / 12, idx % 12 + 1);
      time_labels.push_back(buf);
    }
  }

  DiscardSummary summary;
  summary.accepted_records = maintenance.size();
  struct Event {
    const VehicleRecord* vehicle;
    std::string system;
    std::size_t bucket;
  };
  std::vector<Event> events;
  events.reserve(maintenance.size());
  for (const auto& r : maintenance) {
    auto it = by_unit.find(r.unit_no);
    if (it == by_unit.end()) {
      ++summary.discarded["unknown_vehicle"];
      continue;
    }
    const VehicleRecord* v = it->second;
    if (v->model_year < spec.purchase_year_floor) {
      ++summary.discarded["below_purchase_year_floor"];
      continue;
    }
    const Date& d = r.job_open_date;
    std::size_t bucket = 0;
    if (lifetime) {
      const int age = d.year - v->model_year;
      if (age < 0) {
        ++summary.discarded["before_purchase_year"];
        continue;
      }
      if (age >= spec.horizon_years) {
        ++summary.discarded["beyond_lifetime_horizon"];
        continue;
      }
      bucket = static_cast<std::size_t>(age);
    } else {
      const YearMonth ym{d.year, d.month};
      if (ym < spec.window_start || end < ym) {
        ++summary.discarded["outside_window"];
        continue;
      }
      bucket = yearly ? static_cast<std::size_t>(d.year - spec.window_start.year)
                      : static_cast<std::size_t>(ym.index() - spec.window_start.index());
    }
    events.push_back({v, normalize_system(r.system_desc), bucket});
  }
  require(!events.empty(), ErrorCategory::kData, "no vehicle passes the filters; tensor would be empty");

  std::vector<const VehicleRecord*> fleet;
  std::vector<std::string> systems;
  {
    std::set<const VehicleRecord*> seen;
    std::set<std::string> sys;
    for (const auto& e : events) {
      seen.insert(e.vehicle);
      sys.insert(e.system);
    }
    fleet.assign(seen.begin(), seen.end());
    systems.assign(sys.begin(), sys.end());
  }
  std::sort(fleet.begin(), fleet.end(), [](const VehicleRecord* x, const VehicleRecord* y) {
    if (x->model_year != y->model_year) return x->model_year < y->model_year;
    return x->unit_no < y->unit_no;
  });
  std::unordered_map<const VehicleRecord*, std::size_t> vehicle_index;
  for (std::size_t n = 0; n < fleet.size(); ++n) vehicle_index[fleet[n]] = n;
  std::unordered_map<std::string, std::size_t> system_index;
  for (std::size_t n = 0; n < systems.size(); ++n) system_index[systems[n]] = n;

  std::vector<std::string> unit_labels;
  for (const auto* v : fleet) unit_labels.push_back(v->unit_no);
  const tensor::Dims dims{fleet.size(), systems.size(), time_labels.size()};
  tensor::Tensor3 t(dims, std::vector<double>(dims.size(), 0.0),
                    {std::move(unit_labels), std::move(systems), std::move(time_labels)});
  for (const auto& e : events) t(vehicle_index[e.vehicle], system_index[e.system], e.bucket) += 1.0;
  summary.counted = events.size();
  return {std::move(t), std::move(summary)};
}

}  // namespace fleetmx::ingest

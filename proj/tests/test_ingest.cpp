#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "fleetmx/error.hpp"
#include "fleetmx/ingest.hpp"
#include "fleetmx/synth.hpp"

using namespace fleetmx;
using namespace fleetmx::ingest;

namespace {

const char* kVehicleHeader = "Unit#,Dept#,Make,Model,Year,Purchase Cost,Status Code\n";
const char* kMaintHeader = "Job ID,Unit No,Work Order No,Job Open Date,System Description\n";

std::vector<VehicleRecord> vehicles(const std::string& rows) {
  std::istringstream in(std::string(kVehicleHeader) + rows);
  return parse_vehicles(in);
}

MaintenanceTable maintenance(const std::string& rows) {
  std::istringstream in(std::string(kMaintHeader) + rows);
  return parse_maintenance(in);
}

ErrorCategory category_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCategory::kIo;
}

double sum(const tensor::Tensor3& t) {
  return std::accumulate(t.data().begin(), t.data().end(), 0.0);
}

}  // namespace

TEST(Dates, ParseAndFormat) {
  const auto d = parse_date("2017-01-17");
  ASSERT_TRUE(d);
  EXPECT_EQ(*d, (Date{2017, 1, 17, 0}));
  const auto t = parse_date("2016-02-29 13:05:09");
  ASSERT_TRUE(t);
  EXPECT_EQ(t->seconds, 13 * 3600 + 5 * 60 + 9);
  EXPECT_EQ(format_date(*t), "2016-02-29 13:05:09");
  for (const char* bad : {"", "2017-1-17", "17/01/2017", "2015-02-29", "2017-13-01", "2017-01-17T00:00:00",
                          "2017-01-17 25:00:00"})
    EXPECT_FALSE(parse_date(bad).has_value()) << bad;
  EXPECT_EQ(days_in_month(2000, 2), 29);
  EXPECT_EQ(days_in_month(1900, 2), 28);
}

TEST(Currency, StripsDollarAndCommas) {
  EXPECT_EQ(parse_currency("$20,456"), 20456.0);
  EXPECT_EQ(parse_currency("1234.5"), 1234.5);
  EXPECT_FALSE(parse_currency("").has_value());
  EXPECT_FALSE(parse_currency("n/a").has_value());
}

TEST(Labels, NormalizeSystem) {
  EXPECT_EQ(normalize_system("  Brakes  "), "BRAKES");
  EXPECT_EQ(normalize_system("tires/tubes   &\tvalves"), "TIRES/TUBES & VALVES");
  EXPECT_EQ(make_model_key("Dodge", " charger"), "DODGE CHARGER");
}

TEST(ParseVehicles, HeaderOnlyFileGivesEmptyList) {
  EXPECT_TRUE(vehicles("").empty());
}

TEST(ParseVehicles, PurchaseCostWithCurrencyFormatting) {
  const auto v = vehicles("10001,370,DODGE,CHARGER,2013,\"$20,456\",A\n");
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].purchase_cost, 20456.0);
  EXPECT_EQ(v[0].status_code, 'A');
  EXPECT_EQ(v[0].model_year, 2013);
  EXPECT_EQ(v[0].make_model(), "DODGE CHARGER");
}

TEST(ParseVehicles, UnparseableOptionalFieldsBecomeAbsent) {
  const auto v = vehicles("10001,370,DODGE,CHARGER,2013,unknown,Q\n");
  EXPECT_FALSE(v[0].purchase_cost.has_value());
  EXPECT_FALSE(v[0].status_code.has_value());
}

TEST(ParseVehicles, PassThroughColumnsKept) {
  std::istringstream in("Unit#,Make,Model,Year,LTD Fuel Cost\n7,A,B,2012,\"$1,000\"\n");
  const auto v = parse_vehicles(in);
  EXPECT_EQ(v[0].extra.at("LTD Fuel Cost"), "$1,000");
}

TEST(ParseVehicles, MissingUnitNumberNamesTheRow) {
  try {
    vehicles("10001,370,DODGE,CHARGER,2013,,A\n,370,DODGE,CHARGER,2013,,A\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kParse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ParseVehicles, ErrorCategories) {
  EXPECT_EQ(category_of([] { vehicles("1,1,A,B,1899,,A\n"); }), ErrorCategory::kParse);
  EXPECT_EQ(category_of([] {
              std::istringstream in("Unit#,Make,Model\n1,A,B\n");
              parse_vehicles(in);
            }),
            ErrorCategory::kParse);
  try {
    vehicles("1,1,A,B,2012,,A\n2,1,A,B,2012,,A\n1,1,A,B,2012,,A\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kData);
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
  EXPECT_EQ(category_of([] { parse_vehicles(std::string("/nonexistent/vehicles.csv")); }), ErrorCategory::kIo);
}

TEST(ParseMaintenance, BrakesExample) {
  const auto m = maintenance("500,10001,WO1,2017-01-17,Brakes\n");
  ASSERT_EQ(m.records.size(), 1u);
  EXPECT_EQ(m.records[0].system_desc, "Brakes");
  EXPECT_EQ(m.records[0].job_open_date, (Date{2017, 1, 17, 0}));
  EXPECT_EQ(m.records[0].extra.at("Work Order No"), "WO1");
}

TEST(ParseMaintenance, RejectsAreReportedNotFatal) {
  const auto m = maintenance(
      "1,10001,W,2017-01-17,   \n"
      "2,10001,W,17/01/2017,Brakes\n"
      ",10001,W,2017-01-17,Brakes\n"
      "4,,W,2017-01-17,Brakes\n"
      "5,10001,W,2017-01-18,Brakes\n");
  ASSERT_EQ(m.records.size(), 1u);
  ASSERT_EQ(m.rejects.size(), 4u);
  EXPECT_EQ(m.rejects[0].reason, "missing_system_description");
  EXPECT_EQ(m.rejects[0].line, 2u);
  EXPECT_EQ(m.rejects[1].reason, "bad_job_open_date");
  EXPECT_EQ(m.rejects[2].reason, "missing_job_id");
  EXPECT_EQ(m.rejects[3].reason, "missing_unit_no");
}

TEST(ParseMaintenance, JobsSharingAWorkOrderStayDistinct) {
  const auto m = maintenance(
      "1,10001,WO9,2017-01-17,Brakes\n2,10001,WO9,2017-01-17,Tires\n3,10001,WO9,2017-01-17,Brakes\n");
  EXPECT_EQ(m.records.size(), 3u);
}

TEST(ParseMaintenance, DuplicateJobIdsAreDataError) {
  EXPECT_EQ(category_of([] { maintenance("1,10001,W,2017-01-17,A\n1,10001,W,2017-01-18,B\n"); }),
            ErrorCategory::kData);
}

TEST(BuildTensor, SingleEventAbsoluteMonth) {
  const auto v = vehicles("10001,1,A,B,2014,,A\n");
  const auto m = maintenance("1,10001,W,2015-03-09,Brakes\n");
  TensorizeSpec spec;
  spec.window_start = {2015, 1};
  spec.window_end = YearMonth{2015, 12};
  const auto b = build_tensor(v, m.records, spec);
  ASSERT_EQ(b.tensor.dims(), (tensor::Dims{1, 1, 12}));
  for (std::size_t k = 0; k < 12; ++k) EXPECT_EQ(b.tensor(0, 0, k), k == 2 ? 1.0 : 0.0);
  EXPECT_EQ(b.tensor.labels(3)[2], "2015-03");
  EXPECT_EQ(b.tensor.labels(2)[0], "BRAKES");
}

TEST(BuildTensor, SingleEventLifetimeYear) {
  const auto v = vehicles("10001,1,A,B,2014,,A\n");
  const auto m = maintenance("1,10001,W,2015-03-09,Brakes\n");
  TensorizeSpec spec;
  spec.time_mode = TimeMode::kLifetime;
  spec.granularity = Granularity::kYear;
  const auto b = build_tensor(v, m.records, spec);
  ASSERT_EQ(b.tensor.dims().k, 8u);
  EXPECT_EQ(b.tensor(0, 0, 1), 1.0);
  EXPECT_EQ(sum(b.tensor), 1.0);
}

TEST(BuildTensor, AxisOrderingAndFloor) {
  const auto v = vehicles("30,1,A,B,2015,,A\n20,1,A,B,2014,,A\n10,1,A,B,2015,,A\n5,1,A,B,2009,,A\n99,1,A,B,2016,,A\n");
  const auto m = maintenance(
      "1,10,W,2016-01-01,tires\n2,20,W,2016-01-01,Brakes\n3,30,W,2016-01-01,brakes \n4,5,W,2016-01-01,Brakes\n"
      "5,77,W,2016-01-01,Brakes\n");
  TensorizeSpec spec;
  spec.window_start = {2016, 1};
  spec.window_end = YearMonth{2016, 6};
  const auto b = build_tensor(v, m.records, spec);
  EXPECT_EQ(b.tensor.labels(1), (std::vector<std::string>{"20", "10", "30"}));
  EXPECT_EQ(b.tensor.labels(2), (std::vector<std::string>{"BRAKES", "TIRES"}));
  EXPECT_EQ(b.discards.discarded.at("below_purchase_year_floor"), 1u);
  EXPECT_EQ(b.discards.discarded.at("unknown_vehicle"), 1u);
}

TEST(BuildTensor, LifetimeHorizonClampIsCounted) {
  const auto v = vehicles("1,1,A,B,2010,,A\n");
  const auto m = maintenance("1,1,W,2010-05-01,X\n2,1,W,2011-05-01,X\n2b,1,W,2013-05-01,X\n3,1,W,2009-05-01,X\n");
  TensorizeSpec spec;
  spec.time_mode = TimeMode::kLifetime;
  spec.granularity = Granularity::kYear;
  spec.horizon_years = 2;
  const auto b = build_tensor(v, m.records, spec);
  EXPECT_EQ(b.tensor(0, 0, 0), 1.0);
  EXPECT_EQ(b.tensor(0, 0, 1), 1.0);
  EXPECT_EQ(b.discards.discarded.at("beyond_lifetime_horizon"), 1u);
  EXPECT_EQ(b.discards.discarded.at("before_purchase_year"), 1u);
}

TEST(BuildTensor, YearGranularityAbsolute) {
  const auto v = vehicles("1,1,A,B,2012,,A\n");
  const auto m = maintenance("1,1,W,2012-05-01,X\n2,1,W,2013-12-31,X\n3,1,W,2013-01-01,X\n");
  TensorizeSpec spec;
  spec.granularity = Granularity::kYear;
  spec.window_start = {2012, 1};
  const auto b = build_tensor(v, m.records, spec);
  EXPECT_EQ(b.tensor.labels(3), (std::vector<std::string>{"2012", "2013"}));
  EXPECT_EQ(b.tensor(0, 0, 1), 2.0);
}

TEST(BuildTensor, SpecValidationAndEmptyResult) {
  const auto v = vehicles("1,1,A,B,2012,,A\n");
  const auto m = maintenance("1,1,W,2012-05-01,X\n");
  TensorizeSpec bad;
  bad.horizon_years = 0;
  EXPECT_EQ(category_of([&] { build_tensor(v, m.records, bad); }), ErrorCategory::kInvalidArgument);
  TensorizeSpec inverted;
  inverted.window_start = {2013, 1};
  inverted.window_end = YearMonth{2012, 1};
  EXPECT_EQ(category_of([&] { build_tensor(v, m.records, inverted); }), ErrorCategory::kInvalidArgument);
  TensorizeSpec lifetime_month;
  lifetime_month.time_mode = TimeMode::kLifetime;
  EXPECT_EQ(category_of([&] { build_tensor(v, m.records, lifetime_month); }), ErrorCategory::kInvalidArgument);
  TensorizeSpec outside;
  outside.window_start = {2014, 1};
  outside.window_end = YearMonth{2014, 12};
  EXPECT_EQ(category_of([&] { build_tensor(v, m.records, outside); }), ErrorCategory::kData);
}

TEST(BuildTensor, ConservationAndIdempotenceOnSyntheticFleet) {
  const auto g = synth::generate(synth::demo_spec());
  std::istringstream vin(g.vehicles_csv), min(g.maintenance_csv);
  const auto v = parse_vehicles(vin);
  const auto m = parse_maintenance(min);
  EXPECT_TRUE(m.rejects.empty());
  for (const auto& spec : {TensorizeSpec{TimeMode::kAbsolute, Granularity::kMonth, {2014, 1}, YearMonth{2015, 6}},
                           TensorizeSpec{TimeMode::kAbsolute, Granularity::kYear, {2013, 1}, std::nullopt},
                           TensorizeSpec{TimeMode::kLifetime, Granularity::kYear, {2010, 1}, std::nullopt, 2}}) {
    const auto b1 = build_tensor(v, m.records, spec);
    EXPECT_EQ(static_cast<std::size_t>(sum(b1.tensor)) + b1.discards.total_discarded(), m.records.size());
    EXPECT_EQ(b1.discards.counted, static_cast<std::size_t>(sum(b1.tensor)));
    const auto b2 = build_tensor(v, m.records, spec);
    EXPECT_EQ(b1.tensor, b2.tensor);
  }
}

TEST(BuildTensor, SliceSumsMatchGeneratorBookkeeping) {
  const auto spec = synth::demo_spec();
  const auto g = synth::generate(spec);
  std::istringstream vin(g.vehicles_csv), min(g.maintenance_csv);
  const auto v = parse_vehicles(vin);
  const auto m = parse_maintenance(min);
  TensorizeSpec ts;
  ts.window_start = spec.start;
  ts.window_end = YearMonth{spec.start.year + (spec.start.month - 1 + spec.n_months - 1) / 12,
                            (spec.start.month - 1 + spec.n_months - 1) % 12 + 1};
  const auto b = build_tensor(v, m.records, ts);
  const auto& man = g.manifest;
  const auto d = man.dims();
  EXPECT_EQ(static_cast<std::size_t>(sum(b.tensor)), man.total_jobs);

  // Per-vehicle and per-system slice sums, matched by label.
  const auto& units = b.tensor.labels(1);
  const auto& systems = b.tensor.labels(2);
  for (std::size_t u = 0; u < d.i; ++u) {
    std::uint64_t want = 0;
    for (std::size_t n = u * d.j * d.k; n < (u + 1) * d.j * d.k; ++n) want += man.emitted[n];
    const auto it = std::find(units.begin(), units.end(), man.units[u]);
    if (want == 0) {
      EXPECT_EQ(it, units.end());
      continue;
    }
    ASSERT_NE(it, units.end());
    const std::size_t i = static_cast<std::size_t>(it - units.begin());
    double got = 0.0;
    for (std::size_t j = 0; j < b.tensor.dims().j; ++j)
      for (std::size_t k = 0; k < b.tensor.dims().k; ++k) got += b.tensor(i, j, k);
    EXPECT_EQ(got, static_cast<double>(want)) << man.units[u];
  }
  for (std::size_t s = 0; s < d.j; ++s) {
    std::uint64_t want = 0;
    for (std::size_t u = 0; u < d.i; ++u)
      for (std::size_t k = 0; k < d.k; ++k) want += man.emitted[(u * d.j + s) * d.k + k];
    const auto it = std::find(systems.begin(), systems.end(), man.systems[s]);
    if (want == 0) continue;
    ASSERT_NE(it, systems.end());
    const std::size_t j = static_cast<std::size_t>(it - systems.begin());
    double got = 0.0;
    for (std::size_t i = 0; i < b.tensor.dims().i; ++i)
      for (std::size_t k = 0; k < b.tensor.dims().k; ++k) got += b.tensor(i, j, k);
    EXPECT_EQ(got, static_cast<double>(want)) << man.systems[s];
  }
}

TEST(DiscardSummary, JsonShape) {
  DiscardSummary s;
  s.accepted_records = 3;
  s.counted = 2;
  s.discarded["outside_window"] = 1;
  const std::string j = s.to_json();
  EXPECT_NE(j.find("\"discarded_total\": 1"), std::string::npos);
  EXPECT_NE(j.find("\"outside_window\": 1"), std::string::npos);
}

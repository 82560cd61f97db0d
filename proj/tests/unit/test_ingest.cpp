#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "aishare/errors.hpp"
#include "aishare/ingest.hpp"
#include "support/tmpdir.hpp"

using namespace aishare;
using namespace aishare::ingest;
using testsupport::TempDir;
using testsupport::write_file;

namespace {

const char* kTelemetryHeader = "economy,period,active_users,ai_users,opt_in_rate,mad\n";

std::pair<Table, IngestReport> load_telemetry(const TempDir& dir, const std::string& body) {
  auto path = write_file(dir.file("telemetry.csv"), kTelemetryHeader + body);
  return load_table(path, telemetry_schema());
}

}  // namespace

TEST_CASE("well-formed telemetry row is accepted") {
  TempDir dir;
  auto [table, report] = load_telemetry(dir, "ZMB,2025-01,120000,14400,0.62,300000\n");
  CHECK(report.rows_read == 1);
  CHECK(report.rows_accepted == 1);
  CHECK(report.errors.empty());
  REQUIRE(table.rows.size() == 1);
  CHECK(std::get<EconomyId>(table.rows[0].cells[0]).str() == "ZMB");
  CHECK(std::get<Period>(table.rows[0].cells[1]) == Period{2025, 1});
  CHECK(std::get<std::int64_t>(table.rows[0].cells[2]) == 120000);
  CHECK(std::get<double>(table.rows[0].cells[4]) == 0.62);
  CHECK(report.coverage.at(Period{2025, 1}) == 1);
}

TEST_CASE("out-of-range fraction is rejected with its line number") {
  TempDir dir;
  auto [table, report] = load_telemetry(dir, "ZMB,2025-01,120000,14400,1.62,300000\n");
  CHECK(report.rows_read == 1);
  CHECK(report.rows_accepted == 0);
  REQUIRE(report.errors.size() == 1);
  CHECK(report.errors[0].line == 2);
  CHECK(report.errors[0].message.find("opt_in_rate out of [0,1]") != std::string::npos);
  CHECK(table.rows.empty());
}

TEST_CASE("duplicate keys keep the first occurrence") {
  TempDir dir;
  auto [table, report] = load_telemetry(dir,
                                        "ZMB,2025-01,120000,14400,0.62,300000\n"
                                        "ZMB,2025-01,999,99,0.5,1000\n");
  CHECK(report.rows_read == 2);
  CHECK(report.rows_accepted == 1);
  REQUIRE(report.errors.size() == 1);
  CHECK(report.errors[0].line == 3);
  CHECK(report.errors[0].message == "duplicate key");
  REQUIRE(table.rows.size() == 1);
  CHECK(std::get<std::int64_t>(table.rows[0].cells[2]) == 120000);
}

TEST_CASE("missing file and malformed header are fatal") {
  TempDir dir;
  CHECK_THROWS_AS(load_table(dir.file("nope.csv"), telemetry_schema()), InputError);

  write_file(dir.file("bad.csv"), "economy,period,active_users\nZMB,2025-01,1\n");
  CHECK_THROWS_AS(load_table(dir.file("bad.csv"), telemetry_schema()), InputError);

  write_file(dir.file("empty.csv"), "");
  CHECK_THROWS_AS(load_table(dir.file("empty.csv"), telemetry_schema()), InputError);
}

TEST_CASE("extra columns are ignored with a note") {
  TempDir dir;
  auto path = write_file(dir.file("telemetry.csv"),
                         "economy,period,active_users,ai_users,opt_in_rate,mad,comment\n"
                         "ZMB,2025-01,120000,14400,0.62,300000,hello\n");
  auto [table, report] = load_table(path, telemetry_schema());
  CHECK(report.rows_accepted == 1);
  REQUIRE(report.notes.size() == 1);
  CHECK(report.notes[0].find("extra column 'comment'") != std::string::npos);
}

TEST_CASE("malformed rows are row-level errors, processing continues") {
  TempDir dir;
  auto [table, report] = load_telemetry(dir,
                                        "ZMB,2025-01,120000\n"
                                        "PAK,2025-01,x,1,0.5,10\n"
                                        "IND,2025-01,100,5,0.5,200\n");
  CHECK(report.rows_read == 3);
  CHECK(report.rows_accepted == 1);
  CHECK(report.errors.size() == 2);
  CHECK(report.rows_accepted + report.rejected_row_count() == report.rows_read);
  REQUIRE(table.rows.size() == 1);
  CHECK(std::get<EconomyId>(table.rows[0].cells[0]).str() == "IND");
}

TEST_CASE("annual reference rows forward-fill to all months") {
  TempDir dir;
  auto path = write_file(dir.file("market.csv"),
                         "economy,period,windows_market_share,mobile_desktop_ratio\n"
                         "ZMB,2025,0.7,2.1\n"
                         "PAK,2025-03,0.8,2.4\n");
  auto [table, report] = load_table(path, market_schema());
  CHECK(report.rows_read == 2);
  CHECK(report.rows_accepted == 2);
  CHECK(table.rows.size() == 13);  // 12 filled months + 1 explicit
  REQUIRE_FALSE(report.notes.empty());
  CHECK(report.notes[0].find("annual row") != std::string::npos);

  // Telemetry is monthly-only; a bare year is an error there.
  auto [t2, r2] = load_telemetry(dir, "ZMB,2025,120000,14400,0.62,300000\n");
  CHECK(r2.rows_accepted == 0);
  REQUIRE(r2.errors.size() == 1);
  CHECK(r2.errors[0].message.find("not a valid period") != std::string::npos);
}

TEST_CASE("optional cells may be empty, required cells may not") {
  TempDir dir;
  auto path = write_file(dir.file("context.csv"),
                         "economy,period,internet_penetration,gdp_per_capita\n"
                         "ZMB,2025-01,,\n"
                         "PAK,2025-01,0.33,1600\n");
  auto [table, report] = load_table(path, context_schema());
  CHECK(report.rows_accepted == 2);
  CHECK(std::holds_alternative<std::monostate>(table.rows[0].cells[2]));
  CHECK(std::get<double>(table.rows[1].cells[2]) == 0.33);

  auto [t2, r2] = load_telemetry(dir, "ZMB,2025-01,,14400,0.62,300000\n");
  CHECK(r2.rows_accepted == 0);
  CHECK(r2.errors[0].message.find("missing value for required column") != std::string::npos);
}

TEST_CASE("identical bytes load identically regardless of file name") {
  TempDir dir;
  std::string content = std::string(kTelemetryHeader) +
                        "ZMB,2025-01,120000,14400,0.62,300000\n"
                        "PAK,2025-01,90000,9000,0.8,200000\n";
  auto path_a = write_file(dir.file("a.csv"), content);
  auto path_b = write_file(dir.file("b.csv"), content);
  auto [table_a, report_a] = load_table(path_a, telemetry_schema());
  auto [table_b, report_b] = load_table(path_b, telemetry_schema());

  REQUIRE(table_a.rows.size() == table_b.rows.size());
  for (std::size_t i = 0; i < table_a.rows.size(); ++i) {
    CHECK(table_a.rows[i].cells == table_b.rows[i].cells);
  }
  CHECK(report_a.rows_accepted == report_b.rows_accepted);
}

namespace {

struct JoinFixture {
  TempDir dir;
  Table telemetry;
  Table market;
  Table population;
  Table context;

  JoinFixture(const std::string& telemetry_body, const std::string& market_body,
              const std::string& population_body, const std::string& context_body) {
    telemetry = load_table(write_file(dir.file("telemetry.csv"),
                                      kTelemetryHeader + telemetry_body),
                           telemetry_schema())
                    .first;
    market = load_table(
                 write_file(dir.file("market.csv"),
                            "economy,period,windows_market_share,mobile_desktop_ratio\n" +
                                market_body),
                 market_schema())
                 .first;
    population =
        load_table(write_file(dir.file("population.csv"),
                              "economy,period,working_age_pop,total_pop\n" + population_body),
                   population_schema())
            .first;
    context = load_table(
                  write_file(dir.file("context.csv"),
                             "economy,period,internet_penetration,gdp_per_capita\n" +
                                 context_body),
                  context_schema())
                  .first;
  }
};

}  // namespace

TEST_CASE("join excludes economies missing reference data and reports them") {
  JoinFixture fixture(
      "ZMB,2025-01,120000,14400,0.62,300000\nPAK,2025-01,90000,9000,0.8,200000\n",
      "ZMB,2025-01,0.7,2.1\n", "ZMB,2025-01,10300000,20000000\n",
      "ZMB,2025-01,0.35,1300\n");
  auto result = join_snapshots(fixture.telemetry, fixture.market, fixture.population,
                               &fixture.context);
  REQUIRE(result.snapshots.size() == 1);
  REQUIRE(result.snapshots.at(Period{2025, 1}).size() == 1);
  const auto& snapshot = result.snapshots.at(Period{2025, 1})[0];
  CHECK(snapshot.telemetry.economy.str() == "ZMB");
  CHECK(snapshot.reference.internet_penetration == 0.35);
  REQUIRE(result.report.errors.size() == 1);
  CHECK(result.report.errors[0].message.find("PAK") != std::string::npos);
  CHECK(result.report.errors[0].message.find("missing reference") != std::string::npos);
}

TEST_CASE("telemetry without a matching reference period is excluded") {
  JoinFixture fixture("ZMB,2025-02,120000,14400,0.62,300000\n", "ZMB,2025-01,0.7,2.1\n",
                      "ZMB,2025-01,10300000,20000000\n", "ZMB,2025-01,0.35,1300\n");
  auto result = join_snapshots(fixture.telemetry, fixture.market, fixture.population,
                               &fixture.context);
  CHECK(result.snapshots.empty());
  CHECK(result.report.errors.size() == 1);
}

TEST_CASE("full 20x3 fixture joins to 60 snapshots with no errors") {
  std::string telemetry_body;
  std::string market_body;
  std::string population_body;
  std::string context_body;
  for (int e = 0; e < 20; ++e) {
    std::string code = "A";
    code.push_back(static_cast<char>('A' + e / 10));
    code.push_back(static_cast<char>('A' + e % 10));
    for (int m = 1; m <= 3; ++m) {
      std::string period = "2025-0" + std::to_string(m);
      telemetry_body += code + "," + period + ",100000,12000,0.6,250000\n";
      market_body += code + "," + period + ",0.6,1.2\n";
      population_body += code + "," + period + ",1000000,1800000\n";
      context_body += code + "," + period + ",0.5,10000\n";
    }
  }
  JoinFixture fixture(telemetry_body, market_body, population_body, context_body);
  auto result = join_snapshots(fixture.telemetry, fixture.market, fixture.population,
                               &fixture.context);
  CHECK(result.report.errors.empty());
  CHECK(result.snapshots.size() == 3);
  std::size_t total = 0;
  for (const auto& [period, snapshots] : result.snapshots) {
    total += snapshots.size();
    CHECK(result.report.coverage.at(period) == 20);
  }
  CHECK(total == 60);
  CHECK(result.report.rows_accepted == 60);
}

TEST_CASE("no silent drops: every telemetry row lands in a snapshot or the report") {
  JoinFixture fixture(
      "ZMB,2025-01,120000,14400,0.62,300000\n"
      "PAK,2025-01,90000,9000,0.8,200000\n"     // missing reference
      "IND,2025-01,100,500,0.5,1000\n",         // ai > active, invariant breach
      "ZMB,2025-01,0.7,2.1\nIND,2025-01,0.6,2.0\n",
      "ZMB,2025-01,10300000,20000000\nIND,2025-01,970000000,1430000000\n",
      "ZMB,2025-01,0.35,1300\n");
  auto result = join_snapshots(fixture.telemetry, fixture.market, fixture.population,
                               &fixture.context);
  std::size_t snapshots = 0;
  for (const auto& [period, rows] : result.snapshots) {
    snapshots += rows.size();
  }
  CHECK(result.report.rows_read == 3);
  CHECK(snapshots + result.report.rejected_row_count() ==
        static_cast<std::size_t>(result.report.rows_read));
  // The invariant breach names the rule.
  bool found = false;
  for (const auto& error : result.report.errors) {
    if (error.message.find("ai_users <= active_users") != std::string::npos) {
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("join without a context table leaves optional fields absent") {
  JoinFixture fixture("ZMB,2025-01,120000,14400,0.62,300000\n", "ZMB,2025-01,0.7,2.1\n",
                      "ZMB,2025-01,10300000,20000000\n", "ZMB,2025-01,0.35,1300\n");
  auto result =
      join_snapshots(fixture.telemetry, fixture.market, fixture.population, nullptr);
  const auto& snapshot = result.snapshots.at(Period{2025, 1})[0];
  CHECK_FALSE(snapshot.reference.internet_penetration.has_value());
  CHECK_FALSE(snapshot.reference.gdp_per_capita.has_value());
}

TEST_CASE("regions assemble with membership rules enforced") {
  TempDir dir;
  auto path = write_file(dir.file("regions.csv"),
                         "region,name,member\n"
                         "R-EAF,East Africa,BDI\n"
                         "R-EAF,East Africa,ERI\n"
                         "R-EAF,East Africa,SOM\n"
                         "R-WAF,West Africa,BDI\n"   // already owned by R-EAF
                         "R-ONE,Lonely,TZA\n"        // fewer than 2 members
                         "XXX,Bad,KEN\n");           // not an R- id
  auto [table, load_report] = load_table(path, regions_schema());
  auto [regions, report] = assemble_regions(table);

  REQUIRE(regions.size() == 1);
  CHECK(regions[0].region.str() == "R-EAF");
  CHECK(regions[0].members.size() == 3);
  CHECK(regions[0].contains(EconomyId::must("SOM")));
  CHECK(report.errors.size() == 3);
}

TEST_CASE("duplicate region membership rows are duplicate keys at load") {
  TempDir dir;
  auto path = write_file(dir.file("regions.csv"),
                         "region,name,member\n"
                         "R-EAF,East Africa,BDI\n"
                         "R-EAF,East Africa,BDI\n");
  auto [table, report] = load_table(path, regions_schema());
  CHECK(report.rows_accepted == 1);
  REQUIRE(report.errors.size() == 1);
  CHECK(report.errors[0].message == "duplicate key");
}

TEST_CASE("quoted fields with embedded commas parse") {
  TempDir dir;
  auto path = write_file(dir.file("regions.csv"),
                         "region,name,member\n"
                         "R-CAR,\"Caribbean, small islands\",ATG\n"
                         "R-CAR,\"Caribbean, small islands\",DMA\n");
  auto [table, report] = load_table(path, regions_schema());
  CHECK(report.errors.empty());
  auto [regions, r2] = assemble_regions(table);
  REQUIRE(regions.size() == 1);
  CHECK(regions[0].name == "Caribbean, small islands");
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "aishare/model.hpp"
#include "aishare/rng.hpp"
#include "support/fixtures.hpp"

using namespace aishare;
using testsupport::SnapshotBuilder;

TEST_CASE("economy id accepts alpha-3 and R- region codes") {
  CHECK(EconomyId::parse("ZMB").has_value());
  CHECK(EconomyId::parse("R-EAF").has_value());
  CHECK(EconomyId::must("R-EAF").is_region());
  CHECK_FALSE(EconomyId::must("ZMB").is_region());

  for (auto bad : {"", "ZM", "ZMBA", "zmb", "Z1B", "R-EA", "r-EAF", "R-eaf", "R-EAFX"}) {
    CAPTURE(bad);
    CHECK_FALSE(EconomyId::parse(bad).has_value());
  }
  CHECK_THROWS_AS(EconomyId::must("bogus"), std::invalid_argument);
}

TEST_CASE("economy id parsing round-trips") {
  for (auto code : {"AAA", "ZZZ", "ZMB", "R-EAF", "R-ZZZ"}) {
    CHECK(EconomyId::must(code).str() == code);
  }
  // Random uppercase codes round-trip too.
  CounterRng rng(7, 0);
  for (int i = 0; i < 200; ++i) {
    std::string code;
    for (int c = 0; c < 3; ++c) {
      code.push_back(static_cast<char>('A' + rng.next_below(26)));
    }
    CHECK(EconomyId::must(code).str() == code);
  }
}

TEST_CASE("period parsing and arithmetic") {
  auto period = Period::parse("2025-01");
  REQUIRE(period.has_value());
  CHECK(period->year == 2025);
  CHECK(period->month == 1);
  CHECK(period->str() == "2025-01");

  for (auto bad : {"2025-13", "2025-00", "25-01", "2025-1", "2025/01", "202501", ""}) {
    CAPTURE(bad);
    CHECK_FALSE(Period::parse(bad).has_value());
  }

  CHECK(Period{2024, 12}.next() == Period{2025, 1});
  CHECK(Period{2025, 1}.prev() == Period{2024, 12});
  CHECK(Period{2024, 12} < Period{2025, 1});
  CHECK(Period::from_index(Period{2031, 7}.index()) == Period{2031, 7});
}

TEST_CASE("consistent snapshot validates clean") {
  auto snapshot = SnapshotBuilder("ZMB").build();
  CHECK(validate_snapshot(snapshot).empty());
}

TEST_CASE("violations name the broken field") {
  SUBCASE("ai_users above active_users") {
    auto snapshot = SnapshotBuilder("ZMB").active(100).ai(150).mad(200).build();
    auto violations = validate_snapshot(snapshot);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].field == "ai_users");
    CHECK(violations[0].rule == "0 <= ai_users <= active_users");
  }
  SUBCASE("zero windows market share breaks the division guard") {
    auto snapshot = SnapshotBuilder("ZMB").win_share(0.0).build();
    auto violations = validate_snapshot(snapshot);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].rule == "windows_market_share > 0");
  }
  SUBCASE("mad below active_users") {
    auto snapshot = SnapshotBuilder("ZMB").active(1000).ai(10).mad(900).build();
    auto violations = validate_snapshot(snapshot);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].field == "mad");
  }
  SUBCASE("total population below working-age population") {
    auto snapshot = SnapshotBuilder("ZMB").working_age(2'000'000).total(1'500'000).build();
    CHECK(validate_snapshot(snapshot).size() == 1);
  }
  SUBCASE("economy and period must agree across tables") {
    auto snapshot = SnapshotBuilder("ZMB").build();
    snapshot.reference.economy = EconomyId::must("PAK");
    snapshot.reference.period = Period{2025, 2};
    auto violations = validate_snapshot(snapshot);
    CHECK(violations.size() == 2);
  }
  SUBCASE("opt-in rate outside the unit interval") {
    auto snapshot = SnapshotBuilder("ZMB").opt_in(1.62).build();
    auto violations = validate_snapshot(snapshot);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].field == "opt_in_rate");
  }
}

TEST_CASE("validation is total over hostile values") {
  auto nan = std::numeric_limits<double>::quiet_NaN();
  auto inf = std::numeric_limits<double>::infinity();

  auto snapshot = SnapshotBuilder("ZMB").build();
  snapshot.telemetry.opt_in_rate = nan;
  snapshot.reference.windows_market_share = nan;
  snapshot.reference.mobile_desktop_ratio = -inf;
  snapshot.reference.internet_penetration = nan;
  snapshot.reference.gdp_per_capita = nan;
  snapshot.telemetry.active_users = -5;
  snapshot.reference.working_age_pop = 0;

  auto violations = validate_snapshot(snapshot);
  CHECK(violations.size() >= 6);  // every poisoned field is named
  for (const auto& violation : violations) {
    CHECK_FALSE(violation.field.empty());
    CHECK_FALSE(violation.rule.empty());
  }
}

TEST_CASE("mobile average resolution prefers the region, then global") {
  GlobalContext context;
  context.mobile_avg_global = 1.5;
  context.regional_mobile_avg[EconomyId::must("R-EAF")] = 2.5;
  context.region_of[EconomyId::must("BDI")] = EconomyId::must("R-EAF");

  CHECK(context.mobile_avg_for(EconomyId::must("BDI")) == 2.5);
  CHECK(context.mobile_avg_for(EconomyId::must("R-EAF")) == 2.5);
  CHECK(context.mobile_avg_for(EconomyId::must("USA")) == 1.5);
}

TEST_CASE("imputation labels round-trip") {
  CHECK(to_string(Imputation::direct) == "direct");
  CHECK(imputation_from_string("region_imputed") == Imputation::region_imputed);
  CHECK_FALSE(imputation_from_string("bogus").has_value());
}

#include "aishare/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <stdexcept>

namespace aishare {

namespace {

bool all_upper_alpha(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c >= 'A' && c <= 'Z';
  });
}

std::string format_count(std::int64_t v) { return std::to_string(v); }

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

bool EconomyId::is_valid(std::string_view text) {
  if (text.size() == 3) {
    return all_upper_alpha(text);
  }
  if (text.size() == 5) {
    return text.substr(0, 2) == "R-" && all_upper_alpha(text.substr(2));
  }
  return false;
}

std::optional<EconomyId> EconomyId::parse(std::string_view text) {
  if (!is_valid(text)) {
    return std::nullopt;
  }
  return EconomyId(std::string(text));
}

EconomyId EconomyId::must(std::string_view text) {
  auto id = parse(text);
  if (!id) {
    throw std::invalid_argument("invalid economy code: '" + std::string(text) + "'");
  }
  return *id;
}

std::optional<Period> Period::parse(std::string_view text) {
  // "YYYY-MM", four digit year, two digit month.
  if (text.size() != 7 || text[4] != '-') {
    return std::nullopt;
  }
  int year = 0;
  int month = 0;
  auto [yp, yec] = std::from_chars(text.data(), text.data() + 4, year);
  auto [mp, mec] = std::from_chars(text.data() + 5, text.data() + 7, month);
  if (yec != std::errc{} || mec != std::errc{} || yp != text.data() + 4 ||
      mp != text.data() + 7) {
    return std::nullopt;
  }
  if (month < 1 || month > 12) {
    return std::nullopt;
  }
  return Period{year, month};
}

std::string Period::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return buf;
}

bool RegionDef::contains(const EconomyId& economy) const {
  return std::find(members.begin(), members.end(), economy) != members.end();
}

double GlobalContext::mobile_avg_for(const EconomyId& economy) const {
  auto region = region_of.find(economy);
  if (region != region_of.end()) {
    auto avg = regional_mobile_avg.find(region->second);
    if (avg != regional_mobile_avg.end()) {
      return avg->second;
    }
  }
  // Regional aggregates cap against their own member average.
  if (economy.is_region()) {
    auto avg = regional_mobile_avg.find(economy);
    if (avg != regional_mobile_avg.end()) {
      return avg->second;
    }
  }
  return mobile_avg_global;
}

std::string_view to_string(Imputation imputation) {
  switch (imputation) {
    case Imputation::direct:
      return "direct";
    case Imputation::region_imputed:
      return "region_imputed";
  }
  return "direct";
}

std::optional<Imputation> imputation_from_string(std::string_view text) {
  if (text == "direct") {
    return Imputation::direct;
  }
  if (text == "region_imputed") {
    return Imputation::region_imputed;
  }
  return std::nullopt;
}

std::vector<Violation> validate_snapshot(const EconomySnapshot& snapshot) {
  std::vector<Violation> out;
  const auto& t = snapshot.telemetry;
  const auto& r = snapshot.reference;
  auto add = [&out](std::string field, std::string rule, std::string observed) {
    out.push_back({std::move(field), std::move(rule), std::move(observed)});
  };

  if (t.economy != r.economy) {
    add("economy", "telemetry and reference agree on economy",
        t.economy.str() + " vs " + r.economy.str());
  }
  if (t.period != r.period) {
    add("period", "telemetry and reference agree on period",
        t.period.str() + " vs " + r.period.str());
  }
  if (t.active_users < 0) {
    add("active_users", "active_users >= 0", format_count(t.active_users));
  }
  if (t.ai_users < 0 || t.ai_users > t.active_users) {
    add("ai_users", "0 <= ai_users <= active_users",
        format_count(t.ai_users) + " of " + format_count(t.active_users));
  }
  if (!(t.opt_in_rate >= 0.0 && t.opt_in_rate <= 1.0)) {  // also catches NaN
    add("opt_in_rate", "0 <= opt_in_rate <= 1", format_real(t.opt_in_rate));
  }
  if (t.mad < t.active_users) {
    add("mad", "mad >= active_users",
        format_count(t.mad) + " vs " + format_count(t.active_users));
  }
  if (!(r.windows_market_share > 0.0)) {
    add("windows_market_share", "windows_market_share > 0",
        format_real(r.windows_market_share));
  }
  if (r.windows_market_share > 1.0) {
    add("windows_market_share", "windows_market_share <= 1",
        format_real(r.windows_market_share));
  }
  if (!(r.mobile_desktop_ratio >= 0.0)) {
    add("mobile_desktop_ratio", "mobile_desktop_ratio >= 0",
        format_real(r.mobile_desktop_ratio));
  }
  if (r.working_age_pop <= 0) {
    add("working_age_pop", "working_age_pop > 0", format_count(r.working_age_pop));
  }
  if (r.total_pop < r.working_age_pop) {
    add("total_pop", "total_pop >= working_age_pop",
        format_count(r.total_pop) + " vs " + format_count(r.working_age_pop));
  }
  if (r.internet_penetration &&
      !(*r.internet_penetration >= 0.0 && *r.internet_penetration <= 1.0)) {
    add("internet_penetration", "0 <= internet_penetration <= 1",
        format_real(*r.internet_penetration));
  }
  if (r.gdp_per_capita && !(*r.gdp_per_capita >= 0.0)) {
    add("gdp_per_capita", "gdp_per_capita >= 0", format_real(*r.gdp_per_capita));
  }
  return out;
}

}  // namespace aishare

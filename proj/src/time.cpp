#include "parksim/time.hpp"

#include <charconv>
#include <cstdio>

#include "parksim/errors.hpp"

namespace parksim {
namespace {

int read_fixed(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  if (pos + len > text.size()) throw DataError("timestamp too short: '" + std::string(text) + "'");
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (ec != std::errc{} || ptr != text.data() + pos + len)
    throw DataError("malformed timestamp: '" + std::string(text) + "'");
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

Timestamp make_date(std::string_view text) {
  using namespace std::chrono;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-')
    throw DataError("malformed date: '" + std::string(text) + "'");
  const year_month_day ymd{year{read_fixed(text, 0, 4)}, month{static_cast<unsigned>(read_fixed(text, 5, 2))},
                           day{static_cast<unsigned>(read_fixed(text, 8, 2))}};
  if (!ymd.ok()) throw DataError("invalid calendar date: '" + std::string(text) + "'");
  return Timestamp{sys_days{ymd}.time_since_epoch()};
}

}  // namespace

Timestamp parse_timestamp(std::string_view raw) {
  const std::string_view text = trim(raw);
  const Timestamp date = make_date(text);
  if (text.size() < 19 || (text[10] != 'T' && text[10] != ' ') || text[13] != ':' || text[16] != ':')
    throw DataError("malformed timestamp: '" + std::string(text) + "'");
  const int hh = read_fixed(text, 11, 2);
  const int mm = read_fixed(text, 14, 2);
  const int ss = read_fixed(text, 17, 2);
  const std::string_view rest = text.substr(19);
  if (!(rest.empty() || rest == "Z")) throw DataError("malformed timestamp: '" + std::string(text) + "'");
  if (hh > 23 || mm > 59 || ss > 59) throw DataError("time of day out of range: '" + std::string(text) + "'");
  return date + Seconds{hh * kSecondsPerHour + mm * 60 + ss};
}

std::optional<Timestamp> parse_optional_timestamp(std::string_view text) {
  if (trim(text).empty()) return std::nullopt;
  return parse_timestamp(text);
}

Timestamp parse_date(std::string_view raw) {
  const std::string_view text = trim(raw);
  if (text.size() != 10) throw DataError("malformed date: '" + std::string(text) + "'");
  return make_date(text);
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const auto tod = (t - day).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(tod / 3600), static_cast<long long>(tod / 60 % 60),
                static_cast<long long>(tod % 60));
  return buf;
}

std::string format_date(Timestamp t) { return format_timestamp(t).substr(0, 10); }

int hour_of_day(Timestamp t) {
  using namespace std::chrono;
  return static_cast<int>((t - floor<days>(t)).count() / kSecondsPerHour);
}

int day_of_week(Timestamp t) {
  using namespace std::chrono;
  return static_cast<int>(weekday{floor<days>(t)}.iso_encoding()) - 1;
}

Timestamp floor_to_hour(Timestamp t) { return std::chrono::floor<std::chrono::hours>(t); }

Timestamp floor_to_day(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

}  // namespace parksim

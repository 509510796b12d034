#include "branchdrift/time.hpp"

#include <cctype>
#include <cstdio>

namespace branchdrift {

namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  // Reads exactly `width` decimal digits.
  std::optional<int> digits(int width) {
    if (pos_ + width > s_.size()) return std::nullopt;
    int value = 0;
    for (int i = 0; i < width; ++i) {
      char c = s_[pos_ + i];
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      value = value * 10 + (c - '0');
    }
    pos_ += width;
    return value;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::optional<ParsedTimestamp> parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);

  Cursor c(text);
  bool negative_year = c.accept('-');
  auto y = c.digits(4);
  if (!y || !c.accept('-')) return std::nullopt;
  auto mo = c.digits(2);
  if (!mo || !c.accept('-')) return std::nullopt;
  auto d = c.digits(2);
  if (!d) return std::nullopt;

  year_month_day ymd{year{negative_year ? -*y : *y}, month{static_cast<unsigned>(*mo)},
                     day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;

  int hh = 0, mm = 0, ss = 0, ms = 0;
  bool had_offset = false;
  int offset_minutes = 0;
  if (!c.done()) {
    if (!c.accept('T') && !c.accept(' ')) return std::nullopt;
    auto h = c.digits(2);
    if (!h || !c.accept(':')) return std::nullopt;
    auto mi = c.digits(2);
    if (!mi) return std::nullopt;
    hh = *h;
    mm = *mi;
    if (c.accept(':')) {
      auto s = c.digits(2);
      if (!s) return std::nullopt;
      ss = *s;
      if (c.accept('.') || c.accept(',')) {
        int scale = 100;
        bool any = false;
        while (std::isdigit(static_cast<unsigned char>(c.peek()))) {
          int digit = *c.digits(1);
          ms += digit * scale;
          scale /= 10;
          any = true;
        }
        if (!any) return std::nullopt;
      }
    }
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    if (c.accept('Z') || c.accept('z')) {
      had_offset = true;
    } else if (c.peek() == '+' || c.peek() == '-') {
      int sign = c.peek() == '-' ? -1 : 1;
      c.accept(c.peek());
      auto oh = c.digits(2);
      if (!oh) return std::nullopt;
      c.accept(':');
      auto om = c.digits(2);
      if (!om) return std::nullopt;
      if (*oh > 23 || *om > 59) return std::nullopt;
      offset_minutes = sign * (*oh * 60 + *om);
      had_offset = true;
    }
    if (!c.done()) return std::nullopt;
  }

  Timestamp local = time_point_cast<milliseconds>(sys_days{ymd}) + hours{hh} + minutes{mm} +
                    seconds{ss} + milliseconds{ms};
  return ParsedTimestamp{local - minutes{offset_minutes}, had_offset};
}

std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  auto day_point = floor<days>(t);
  year_month_day ymd{day_point};
  auto rest = t - day_point;
  auto h = duration_cast<hours>(rest);
  rest -= h;
  auto mi = duration_cast<minutes>(rest);
  rest -= mi;
  auto s = duration_cast<seconds>(rest);
  rest -= s;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(h.count()), static_cast<int>(mi.count()),
                static_cast<int>(s.count()), static_cast<int>(rest.count()));
  return buf;
}

std::string format_date(Timestamp t) {
  return format_iso8601(t).substr(0, 10);
}

}  // namespace branchdrift

#include <algorithm>
#include <cctype>
#include <sstream>

#include "polydub/common.hpp"
#include "polydub/textfront/lexicon_data.hpp"
#include "polydub/textfront/textfront.hpp"

namespace polydub::textfront {

namespace detail {

namespace {

const char* kEnUnits[] = {"zero", "one", "two",   "three", "four",
                          "five", "six", "seven", "eight", "nine",
                          "ten",  "eleven", "twelve", "thirteen", "fourteen",
                          "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
const char* kEnTens[] = {"", "", "twenty", "thirty", "forty",
                         "fifty", "sixty", "seventy", "eighty", "ninety"};

std::string en_below_thousand(long long n) {
  std::string out;
  if (n >= 100) {
    out += std::string(kEnUnits[n / 100]) + " hundred";
    n %= 100;
    if (n) out += " ";
  }
  if (n >= 20) {
    out += kEnTens[n / 10];
    n %= 10;
    if (n) out += std::string(" ") + kEnUnits[n];
  } else if (n > 0 || out.empty()) {
    out += kEnUnits[n];
  }
  return out;
}

}  // namespace

std::string number_to_words_en(long long n) {
  if (n == 0) return "zero";
  std::string sign;
  if (n < 0) {
    sign = "minus ";
    n = -n;
  }
  struct Scale {
    long long value;
    const char* name;
  };
  const Scale scales[] = {{1000000000LL, "billion"}, {1000000LL, "million"},
                          {1000LL, "thousand"}};
  std::string out;
  for (const auto& s : scales) {
    if (n >= s.value) {
      if (!out.empty()) out += " ";
      out += en_below_thousand(n / s.value) + " " + s.name;
      n %= s.value;
    }
  }
  if (n > 0) {
    if (!out.empty()) out += " ";
    out += en_below_thousand(n);
  }
  return sign + out;
}

namespace {

const char* kKoSino[] = {"영", "일", "이", "삼", "사", "오", "육", "칠", "팔", "구"};
const char* kKoNativeOnes[] = {"",     "하나", "둘",   "셋",   "넷",
                               "다섯", "여섯", "일곱", "여덟", "아홉"};
const char* kKoNativeOnesCounter[] = {"",     "한",   "두",   "세",   "네",
                                      "다섯", "여섯", "일곱", "여덟", "아홉"};
const char* kKoNativeTens[] = {"",     "열",   "스물", "서른", "마흔",
                               "쉰",   "예순", "일흔", "여든", "아흔"};

std::string ko_sino_below_10000(long long n) {
  std::string out;
  const long long thousands = n / 1000;
  const long long hundreds = (n / 100) % 10;
  const long long tens = (n / 10) % 10;
  const long long ones = n % 10;
  if (thousands) out += (thousands > 1 ? kKoSino[thousands] : std::string()) + "천";
  if (hundreds) out += (hundreds > 1 ? kKoSino[hundreds] : std::string()) + "백";
  if (tens) out += (tens > 1 ? kKoSino[tens] : std::string()) + "십";
  if (ones) out += kKoSino[ones];
  return out;
}

}  // namespace

std::string number_to_words_ko_sino(long long n) {
  if (n == 0) return "영";
  std::string out;
  if (n >= 100000000LL) {
    out += ko_sino_below_10000(n / 100000000LL) + "억";
    n %= 100000000LL;
  }
  if (n >= 10000) {
    const long long man = n / 10000;
    out += (man > 1 ? ko_sino_below_10000(man) : std::string()) + "만";
    n %= 10000;
  }
  out += ko_sino_below_10000(n);
  return out;
}

std::string number_to_words_ko_native(int n, bool counter_form) {
  if (n <= 0 || n > 99) return number_to_words_ko_sino(n);
  const int tens = n / 10, ones = n % 10;
  std::string out;
  if (tens) {
    // 스물 contracts to 스무 only for exactly 20 in counter position.
    if (tens == 2 && ones == 0 && counter_form) return "스무";
    out += kKoNativeTens[tens];
  }
  if (ones) out += counter_form ? kKoNativeOnesCounter[ones] : kKoNativeOnes[ones];
  return out;
}

namespace {

const char* kJaDigits[] = {"れい", "いち", "に", "さん", "よん",
                           "ご",   "ろく", "なな", "はち", "きゅう"};

std::string ja_hundreds(int d) {
  if (d == 0) return "";
  if (d == 1) return "ひゃく";
  if (d == 3) return "さんびゃく";
  if (d == 6) return "ろっぴゃく";
  if (d == 8) return "はっぴゃく";
  return std::string(kJaDigits[d]) + "ひゃく";
}

std::string ja_thousands(int d) {
  if (d == 0) return "";
  if (d == 1) return "せん";
  if (d == 3) return "さんぜん";
  if (d == 8) return "はっせん";
  return std::string(kJaDigits[d]) + "せん";
}

std::string ja_below_10000(long long n) {
  std::string out;
  out += ja_thousands(static_cast<int>(n / 1000));
  out += ja_hundreds(static_cast<int>((n / 100) % 10));
  const int tens = static_cast<int>((n / 10) % 10);
  if (tens) out += (tens > 1 ? kJaDigits[tens] : std::string()) + "じゅう";
  const int ones = static_cast<int>(n % 10);
  if (ones) out += kJaDigits[ones];
  return out;
}

}  // namespace

std::string number_to_words_ja(long long n) {
  if (n == 0) return "れい";
  std::string out;
  if (n >= 10000) {
    out += ja_below_10000(n / 10000) + "まん";
    n %= 10000;
  }
  out += ja_below_10000(n);
  return out;
}

namespace {

const char* kZhDigits[] = {"零", "一", "二", "三", "四", "五", "六", "七", "八", "九"};

std::string zh_below_10000(long long n, bool leading_unit_one) {
  // leading_unit_one: whether 10..19 keeps the leading 一 (true inside a
  // larger number: 一百一十二).
  std::string out;
  bool pending_zero = false;
  const int thousands = static_cast<int>(n / 1000);
  const int hundreds = static_cast<int>((n / 100) % 10);
  const int tens = static_cast<int>((n / 10) % 10);
  const int ones = static_cast<int>(n % 10);
  if (thousands) out += std::string(kZhDigits[thousands]) + "千";
  if (hundreds) {
    if (!out.empty() && pending_zero) out += "零";
    out += std::string(kZhDigits[hundreds]) + "百";
  } else if (thousands) {
    pending_zero = true;
  }
  if (tens) {
    if (pending_zero && (hundreds == 0) && !out.empty()) out += "零";
    pending_zero = false;
    if (tens == 1 && out.empty() && !leading_unit_one)
      out += "十";
    else
      out += std::string(kZhDigits[tens]) + "十";
  } else if (!out.empty()) {
    pending_zero = true;
  }
  if (ones) {
    if (pending_zero && !out.empty()) out += "零";
    out += kZhDigits[ones];
  }
  return out;
}

}  // namespace

std::string number_to_words_zh(long long n) {
  if (n == 0) return "零";
  std::string out;
  if (n >= 10000) {
    out += zh_below_10000(n / 10000, false) + "万";
    const long long rest = n % 10000;
    if (rest == 0) return out;
    if (rest < 1000) out += "零";
    out += zh_below_10000(rest, true);
    return out;
  }
  return zh_below_10000(n, false);
}

}  // namespace detail

namespace {

bool is_ascii_digit(uint32_t cp) { return cp >= '0' && cp <= '9'; }

// Korean counters verbalized with native numerals (when the count is <= 99).
bool is_ko_native_counter(uint32_t cp) {
  switch (cp) {
    case 0xC2DC:  // 시 (hour)
    case 0xBA85:  // 명 (people)
    case 0xC0B4:  // 살 (age)
    case 0xAC1C:  // 개 (items)
    case 0xBC88:  // 번 (times)
      return true;
    default:
      return false;
  }
}

std::string ordinal_en(long long n) {
  std::string words = detail::number_to_words_en(n);
  static const std::vector<std::pair<const char*, const char*>> kIrregular = {
      {"one", "first"},   {"two", "second"},   {"three", "third"},
      {"five", "fifth"},  {"eight", "eighth"}, {"nine", "ninth"},
      {"twelve", "twelfth"},
  };
  size_t last_space = words.find_last_of(' ');
  std::string head = last_space == std::string::npos ? "" : words.substr(0, last_space + 1);
  std::string last = last_space == std::string::npos ? words : words.substr(last_space + 1);
  for (const auto& [from, to] : kIrregular)
    if (last == from) return head + to;
  if (!last.empty() && last.back() == 'y')
    return head + last.substr(0, last.size() - 1) + "ieth";
  return head + last + "th";
}

std::string normalize_en(const std::string& text) {
  std::string lower;
  lower.reserve(text.size());
  for (char c : text)
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

  std::istringstream iss(lower);
  std::string token;
  std::string out;
  bool first = true;
  while (iss >> token) {
    // split off leading/trailing punctuation (keep apostrophes inside words)
    size_t b = 0, e = token.size();
    auto is_outer_punct = [](char c) {
      return c == ',' || c == '?' || c == '!' || c == '-';
    };
    while (b < e && is_outer_punct(token[b])) ++b;
    while (e > b && is_outer_punct(token[e - 1])) --e;
    std::string lead = token.substr(0, b);
    std::string trail = token.substr(e);
    std::string core = token.substr(b, e - b);

    // abbreviation table (keys end with '.')
    bool expanded = false;
    for (const auto& [abbr, full] : data::en_abbreviations()) {
      if (core == abbr) {
        core = full;
        expanded = true;
        break;
      }
    }
    if (!expanded && !core.empty()) {
      // trailing sentence period is not part of a number/word
      std::string core_trail;
      while (!core.empty() && core.back() == '.' ) {
        // keep one period attached only for abbreviation matching (done above)
        core_trail.insert(core_trail.begin(), '.');
        core.pop_back();
      }
      const bool all_digits = !core.empty() &&
          std::all_of(core.begin(), core.end(), [](char c) { return c >= '0' && c <= '9'; });
      if (all_digits && core.size() <= 12) {
        core = detail::number_to_words_en(std::stoll(core));
      } else if (core.size() > 2 && core.size() <= 14) {
        // ordinal: digits + st/nd/rd/th
        const std::string suf = core.substr(core.size() - 2);
        const std::string digits = core.substr(0, core.size() - 2);
        const bool dig_ok = !digits.empty() &&
            std::all_of(digits.begin(), digits.end(),
                        [](char c) { return c >= '0' && c <= '9'; });
        if (dig_ok && (suf == "st" || suf == "nd" || suf == "rd" || suf == "th"))
          core = ordinal_en(std::stoll(digits));
      }
      // decimal like 3.5 -> "three point five"
      if (!core.empty()) {
        const size_t dotpos = core.find('.');
        if (dotpos != std::string::npos && dotpos > 0 && dotpos + 1 < core.size()) {
          const std::string ip = core.substr(0, dotpos), fp = core.substr(dotpos + 1);
          auto digits_only = [](const std::string& s) {
            return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
              return c >= '0' && c <= '9';
            });
          };
          if (digits_only(ip) && digits_only(fp)) {
            std::string frac;
            for (char c : fp) frac += " " + std::string(detail::number_to_words_en(c - '0'));
            core = detail::number_to_words_en(std::stoll(ip)) + " point" + frac;
          }
        }
      }
      core += core_trail;
    }
    if (!first) out += " ";
    out += lead + core + trail;
    first = false;
  }
  return out;
}

// Scans for digit runs in CJK text and verbalizes them in place.
std::string normalize_cjk(const std::string& text, Lang lang) {
  auto cps = utf8_decode(text);
  std::string out;
  size_t i = 0;
  while (i < cps.size()) {
    if (is_ascii_digit(cps[i])) {
      size_t j = i;
      long long value = 0;
      bool overflow = false;
      while (j < cps.size() && is_ascii_digit(cps[j])) {
        if (value > 99999999999LL) overflow = true;
        value = value * 10 + (cps[j] - '0');
        ++j;
      }
      if (overflow) {
        for (size_t k = i; k < j; ++k) out += utf8_encode(cps[k]);
      } else if (lang == Lang::ko) {
        const uint32_t next = j < cps.size() ? cps[j] : 0;
        const bool mari = next == 0xB9C8 && j + 1 < cps.size() && cps[j + 1] == 0xB9AC;
        const bool native =
            value >= 1 && value <= 99 && (is_ko_native_counter(next) || mari);
        out += native ? detail::number_to_words_ko_native(static_cast<int>(value), true)
                      : detail::number_to_words_ko_sino(value);
      } else if (lang == Lang::ja) {
        out += detail::number_to_words_ja(value);
      } else {
        out += detail::number_to_words_zh(value);
      }
      i = j;
    } else {
      out += utf8_encode(cps[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

std::string normalize_text(const std::string& text, Lang lang) {
  std::string out = lang == Lang::en ? normalize_en(text) : normalize_cjk(text, lang);
  // collapse any double spaces introduced by expansions
  std::string collapsed;
  bool prev_space = false;
  for (char c : out) {
    if (c == ' ') {
      if (!prev_space) collapsed += c;
      prev_space = true;
    } else {
      collapsed += c;
      prev_space = false;
    }
  }
  while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  while (!collapsed.empty() && collapsed.front() == ' ') collapsed.erase(collapsed.begin());
  return collapsed;
}

}  // namespace polydub::textfront

#include "polydub/textfront/textfront.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>
#include <set>
#include <sstream>

#include "polydub/common.hpp"
#include "polydub/textfront/lexicon_data.hpp"

namespace polydub::textfront {

std::string to_string(Lang lang) {
  switch (lang) {
    case Lang::ko: return "ko";
    case Lang::en: return "en";
    case Lang::ja: return "ja";
    case Lang::zh: return "zh";
  }
  throw std::logic_error("bad Lang");
}

Lang lang_from_string(const std::string& s) {
  if (s == "ko") return Lang::ko;
  if (s == "en") return Lang::en;
  if (s == "ja") return Lang::ja;
  if (s == "zh") return Lang::zh;
  throw std::invalid_argument("unknown language tag: " + s + " (expected ko|en|ja|zh)");
}

int lang_index(Lang lang) { return static_cast<int>(lang); }

void PhonemeInventory::rebuild_index() {
  index.clear();
  for (size_t i = 0; i < symbols.size(); ++i)
    index.emplace(symbols[i], static_cast<int>(i));
  if (index.size() != symbols.size())
    throw std::invalid_argument("inventory has duplicate symbols");
}

uint64_t PhonemeInventory::content_hash() const {
  std::string blob;
  for (const auto& s : symbols) {
    blob += s;
    blob += '\n';
  }
  return fnv1a64(blob);
}

namespace {

namespace jamo {

const std::vector<std::string>& leads() {
  static const std::vector<std::string> k = {
      "ㄱ", "ㄲ", "ㄴ", "ㄷ", "ㄸ", "ㄹ", "ㅁ", "ㅂ", "ㅃ", "ㅅ",
      "ㅆ", "ㅇ", "ㅈ", "ㅉ", "ㅊ", "ㅋ", "ㅌ", "ㅍ", "ㅎ"};
  return k;
}

const std::vector<std::string>& vowels() {
  static const std::vector<std::string> k = {
      "ㅏ", "ㅐ", "ㅑ", "ㅒ", "ㅓ", "ㅔ", "ㅕ", "ㅖ", "ㅗ", "ㅘ", "ㅙ",
      "ㅚ", "ㅛ", "ㅜ", "ㅝ", "ㅞ", "ㅟ", "ㅠ", "ㅡ", "ㅢ", "ㅣ"};
  return k;
}

const std::vector<std::string>& tails() {
  static const std::vector<std::string> k = {
      "",   "ㄱ", "ㄲ", "ㄳ", "ㄴ", "ㄵ", "ㄶ", "ㄷ", "ㄹ", "ㄺ",
      "ㄻ", "ㄼ", "ㄽ", "ㄾ", "ㄿ", "ㅀ", "ㅁ", "ㅂ", "ㅄ", "ㅅ",
      "ㅆ", "ㅇ", "ㅈ", "ㅊ", "ㅋ", "ㅌ", "ㅍ", "ㅎ"};
  return k;
}

}  // namespace jamo

constexpr uint32_t kHangulBase = 0xAC00;
constexpr uint32_t kHangulEnd = 0xD7A3;

bool is_hangul_syllable(uint32_t cp) { return cp >= kHangulBase && cp <= kHangulEnd; }
bool is_compat_jamo(uint32_t cp) { return cp >= 0x3131 && cp <= 0x3163; }
bool is_hiragana(uint32_t cp) { return cp >= 0x3041 && cp <= 0x3096; }
bool is_katakana(uint32_t cp) { return (cp >= 0x30A1 && cp <= 0x30F6) || cp == 0x30FC; }
bool is_cjk_ideograph(uint32_t cp) { return cp >= 0x4E00 && cp <= 0x9FFF; }
bool is_latin_letter(uint32_t cp) {
  return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
}
bool is_digit_cp(uint32_t cp) { return cp >= '0' && cp <= '9'; }
bool is_whitelist_punct(uint32_t cp) {
  return cp == '.' || cp == ',' || cp == '?' || cp == '!' || cp == '\'' || cp == '-';
}
bool is_space_cp(uint32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == 0x3000;
}

bool in_script(uint32_t cp, Lang lang) {
  switch (lang) {
    case Lang::ko: return is_hangul_syllable(cp) || is_compat_jamo(cp);
    case Lang::en: return is_latin_letter(cp);
    case Lang::ja: return is_hiragana(cp) || is_katakana(cp) || is_cjk_ideograph(cp);
    case Lang::zh: return is_cjk_ideograph(cp);
  }
  return false;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_kana(const std::string& reading) {
  std::vector<std::string> out;
  for (uint32_t cp : utf8_decode(reading)) out.push_back(utf8_encode(cp));
  return out;
}

PhonemeInventory make_inventory(Lang lang, std::vector<std::string> symbols) {
  PhonemeInventory inv;
  inv.language = lang;
  inv.symbols = {kPadSymbol, kBosSymbol, kEosSymbol, kWordSepSymbol, kSilenceSymbol};
  for (auto& s : symbols) inv.symbols.push_back(std::move(s));
  inv.rebuild_index();
  return inv;
}

PhonemeInventory build_ko_inventory() {
  std::vector<std::string> syms;
  std::set<std::string> seen;
  auto push = [&](const std::string& s) {
    if (!s.empty() && seen.insert(s).second) syms.push_back(s);
  };
  for (const auto& s : jamo::leads()) push(s);
  for (const auto& s : jamo::vowels()) push(s);
  for (const auto& s : jamo::tails()) push(s);
  return make_inventory(Lang::ko, std::move(syms));
}

PhonemeInventory build_en_inventory() {
  static const char* kConsonants[] = {"B", "CH", "D",  "DH", "F", "G",  "HH", "JH",
                                      "K", "L",  "M",  "N",  "NG", "P", "R",  "S",
                                      "SH", "T", "TH", "V",  "W", "Y",  "Z",  "ZH"};
  static const char* kVowels[] = {"AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
                                  "EY", "IH", "IY", "OW", "OY", "UH", "UW"};
  std::vector<std::string> syms;
  for (const char* c : kConsonants) syms.emplace_back(c);
  for (const char* v : kVowels)
    for (int stress = 0; stress <= 2; ++stress)
      syms.push_back(std::string(v) + std::to_string(stress));
  return make_inventory(Lang::en, std::move(syms));
}

PhonemeInventory build_ja_inventory() {
  std::vector<std::string> syms;
  for (uint32_t cp = 0x3041; cp <= 0x3096; ++cp) syms.push_back(utf8_encode(cp));
  syms.push_back(utf8_encode(0x30FC));  // prolonged sound mark
  return make_inventory(Lang::ja, std::move(syms));
}

PhonemeInventory build_zh_inventory() {
  std::set<std::string> syls;
  for (const auto& [_, reading] : data::zh_entries())
    for (const auto& s : split_ws(reading)) syls.insert(s);
  return make_inventory(Lang::zh, std::vector<std::string>(syls.begin(), syls.end()));
}

struct LexiconCache {
  Lexicon lex;
  std::unordered_map<std::string, const std::vector<std::string>*> map;
  size_t max_key_cps = 1;

  void build(const std::vector<std::pair<const char*, const char*>>& entries,
             bool kana_split) {
    for (const auto& [key, value] : entries) {
      lex.emplace_back(key, kana_split ? split_kana(value) : split_ws(value));
    }
    for (const auto& [key, phones] : lex) {
      map.emplace(key, &phones);
      max_key_cps = std::max(max_key_cps, utf8_decode(key).size());
    }
  }
};

const LexiconCache& en_lexicon() {
  static const LexiconCache cache = [] {
    LexiconCache c;
    c.build(data::en_entries(), false);
    return c;
  }();
  return cache;
}

const LexiconCache& en_letters() {
  static const LexiconCache cache = [] {
    LexiconCache c;
    c.build(data::en_letter_entries(), false);
    return c;
  }();
  return cache;
}

const LexiconCache& ja_lexicon() {
  static const LexiconCache cache = [] {
    LexiconCache c;
    c.build(data::ja_entries(), true);
    return c;
  }();
  return cache;
}

const LexiconCache& zh_lexicon() {
  static const LexiconCache cache = [] {
    LexiconCache c;
    c.build(data::zh_entries(), false);
    return c;
  }();
  return cache;
}

}  // namespace

const PhonemeInventory& inventory(Lang lang) {
  static const PhonemeInventory ko = build_ko_inventory();
  static const PhonemeInventory en = build_en_inventory();
  static const PhonemeInventory ja = build_ja_inventory();
  static const PhonemeInventory zh = build_zh_inventory();
  switch (lang) {
    case Lang::ko: return ko;
    case Lang::en: return en;
    case Lang::ja: return ja;
    case Lang::zh: return zh;
  }
  throw std::logic_error("bad Lang");
}

const Lexicon& bundled_lexicon(Lang lang) {
  switch (lang) {
    case Lang::en: return en_lexicon().lex;
    case Lang::ja: return ja_lexicon().lex;
    case Lang::zh: return zh_lexicon().lex;
    case Lang::ko: {
      static const Lexicon empty;
      return empty;
    }
  }
  throw std::logic_error("bad Lang");
}

std::string clean_text(const std::string& text, Lang lang) {
  std::string out;
  bool pending_space = false;
  bool any = false;
  for (uint32_t cp : utf8_decode(text)) {
    if (is_space_cp(cp)) {
      if (any) pending_space = true;
      continue;
    }
    if (in_script(cp, lang) || is_digit_cp(cp) || is_whitelist_punct(cp)) {
      if (pending_space) {
        out += ' ';
        pending_space = false;
      }
      out += utf8_encode(cp);
      any = true;
    }
  }
  return out;
}

namespace {

void append_hangul_syllable(uint32_t cp, PhonemeSequence& seq) {
  const uint32_t idx = cp - kHangulBase;
  const uint32_t lead = idx / 588;
  const uint32_t vowel = (idx % 588) / 28;
  const uint32_t tail = idx % 28;
  seq.symbols.push_back(jamo::leads()[lead]);
  seq.symbols.push_back(jamo::vowels()[vowel]);
  if (tail) seq.symbols.push_back(jamo::tails()[tail]);
}

void g2p_ko(const std::vector<uint32_t>& cps, PhonemeSequence& seq) {
  for (size_t i = 0; i < cps.size(); ++i) {
    const uint32_t cp = cps[i];
    if (cp == ' ') {
      seq.symbols.push_back(kWordSepSymbol);
    } else if (is_whitelist_punct(cp)) {
      seq.symbols.push_back(kSilenceSymbol);
    } else if (is_hangul_syllable(cp)) {
      append_hangul_syllable(cp, seq);
    } else if (is_compat_jamo(cp)) {
      seq.symbols.push_back(utf8_encode(cp));
    } else {
      throw UnmappableGrapheme(utf8_encode(cp), i);
    }
  }
}

void g2p_en(const std::vector<uint32_t>& cps, PhonemeSequence& seq) {
  size_t i = 0;
  while (i < cps.size()) {
    const uint32_t cp = cps[i];
    if (cp == ' ') {
      seq.symbols.push_back(kWordSepSymbol);
      ++i;
    } else if (is_latin_letter(cp) || cp == '\'') {
      size_t j = i;
      std::string word;
      while (j < cps.size() && (is_latin_letter(cps[j]) || cps[j] == '\'')) {
        word += static_cast<char>(std::tolower(static_cast<int>(cps[j])));
        ++j;
      }
      const auto& lex = en_lexicon().map;
      auto it = lex.find(word);
      if (it != lex.end()) {
        for (const auto& p : *it->second) seq.symbols.push_back(p);
      } else {
        // out-of-vocabulary: spell it letter by letter
        const auto& letters = en_letters().map;
        for (char c : word) {
          if (c == '\'') continue;
          auto lit = letters.find(std::string(1, c));
          for (const auto& p : *lit->second) seq.symbols.push_back(p);
        }
      }
      i = j;
    } else if (is_whitelist_punct(cp)) {
      seq.symbols.push_back(kSilenceSymbol);
      ++i;
    } else {
      throw UnmappableGrapheme(utf8_encode(cp), i);
    }
  }
}

// Greedy longest-match against a lexicon keyed by UTF-8 strings.
bool lexicon_longest_match(const LexiconCache& lex, const std::vector<uint32_t>& cps,
                           size_t i, size_t* matched_cps,
                           const std::vector<std::string>** phones) {
  const size_t max_len = std::min(lex.max_key_cps, cps.size() - i);
  for (size_t len = max_len; len >= 1; --len) {
    std::string key;
    for (size_t k = 0; k < len; ++k) key += utf8_encode(cps[i + k]);
    auto it = lex.map.find(key);
    if (it != lex.map.end()) {
      *matched_cps = len;
      *phones = it->second;
      return true;
    }
  }
  return false;
}

void g2p_ja(const std::vector<uint32_t>& cps, PhonemeSequence& seq) {
  size_t i = 0;
  while (i < cps.size()) {
    const uint32_t cp = cps[i];
    if (cp == ' ') {
      seq.symbols.push_back(kWordSepSymbol);
      ++i;
      continue;
    }
    if (is_whitelist_punct(cp)) {
      seq.symbols.push_back(kSilenceSymbol);
      ++i;
      continue;
    }
    if (is_hiragana(cp) || cp == 0x30FC) {
      seq.symbols.push_back(utf8_encode(cp));
      ++i;
      continue;
    }
    if (cp >= 0x30A1 && cp <= 0x30F6) {  // katakana -> hiragana
      seq.symbols.push_back(utf8_encode(cp - 0x60));
      ++i;
      continue;
    }
    if (is_cjk_ideograph(cp)) {
      size_t matched = 0;
      const std::vector<std::string>* phones = nullptr;
      if (lexicon_longest_match(ja_lexicon(), cps, i, &matched, &phones)) {
        for (const auto& p : *phones) seq.symbols.push_back(p);
        i += matched;
        continue;
      }
      throw UnmappableGrapheme(utf8_encode(cp), i);
    }
    throw UnmappableGrapheme(utf8_encode(cp), i);
  }
}

void g2p_zh(const std::vector<uint32_t>& cps, PhonemeSequence& seq) {
  size_t i = 0;
  while (i < cps.size()) {
    const uint32_t cp = cps[i];
    if (cp == ' ') {
      seq.symbols.push_back(kWordSepSymbol);
      ++i;
      continue;
    }
    if (is_whitelist_punct(cp)) {
      seq.symbols.push_back(kSilenceSymbol);
      ++i;
      continue;
    }
    if (is_cjk_ideograph(cp)) {
      size_t matched = 0;
      const std::vector<std::string>* phones = nullptr;
      if (lexicon_longest_match(zh_lexicon(), cps, i, &matched, &phones)) {
        for (const auto& p : *phones) seq.symbols.push_back(p);
        i += matched;
        continue;
      }
      throw UnmappableGrapheme(utf8_encode(cp), i);
    }
    throw UnmappableGrapheme(utf8_encode(cp), i);
  }
}

}  // namespace

PhonemeSequence grapheme_to_phoneme(const std::string& text, Lang lang) {
  PhonemeSequence seq;
  seq.language = lang;
  const auto cps = utf8_decode(text);
  switch (lang) {
    case Lang::ko: g2p_ko(cps, seq); break;
    case Lang::en: g2p_en(cps, seq); break;
    case Lang::ja: g2p_ja(cps, seq); break;
    case Lang::zh: g2p_zh(cps, seq); break;
  }
  return seq;
}

PhonemeSequence phonemes_to_ids(const PhonemeSequence& seq, const PhonemeInventory& inv) {
  if (seq.language != inv.language)
    throw std::invalid_argument("phonemes_to_ids: language mismatch");
  PhonemeSequence out = seq;
  out.ids.clear();
  out.ids.reserve(seq.symbols.size());
  for (const auto& s : seq.symbols) out.ids.push_back(inv.id_of(s));
  return out;
}

PhonemeSequence ids_to_phonemes(const PhonemeSequence& seq, const PhonemeInventory& inv) {
  if (seq.language != inv.language)
    throw std::invalid_argument("ids_to_phonemes: language mismatch");
  PhonemeSequence out;
  out.language = seq.language;
  out.ids = seq.ids;
  out.symbols.reserve(seq.ids.size());
  for (int id : seq.ids) {
    if (id < 0 || id >= inv.size())
      throw UnknownSymbol("id " + std::to_string(id));
    out.symbols.push_back(inv.symbols[static_cast<size_t>(id)]);
  }
  return out;
}

PhonemeSequence text_to_ids(const std::string& text, Lang lang) {
  const std::string cleaned = clean_text(text, lang);
  const std::string normalized = normalize_text(cleaned, lang);
  PhonemeSequence seq = grapheme_to_phoneme(normalized, lang);
  return phonemes_to_ids(seq, inventory(lang));
}

namespace {
TranslateFn& translator_slot() {
  static TranslateFn fn;
  return fn;
}
std::mutex& translator_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void register_translator(TranslateFn fn) {
  std::lock_guard<std::mutex> lock(translator_mutex());
  translator_slot() = std::move(fn);
}

void clear_translator() {
  std::lock_guard<std::mutex> lock(translator_mutex());
  translator_slot() = nullptr;
}

bool translator_registered() {
  std::lock_guard<std::mutex> lock(translator_mutex());
  return static_cast<bool>(translator_slot());
}

std::string translate(const std::string& text, Lang src, Lang dst) {
  if (src == dst) return text;
  TranslateFn fn;
  {
    std::lock_guard<std::mutex> lock(translator_mutex());
    fn = translator_slot();
  }
  if (!fn) throw TranslatorUnavailable();
  return fn(text, src, dst);
}

TranslateFn make_table_translator(std::map<std::string, std::string> table) {
  return [table = std::move(table)](const std::string& text, Lang, Lang) {
    std::string out;
    bool first = true;
    for (const auto& tok : split_ws(text)) {
      if (!first) out += " ";
      auto it = table.find(tok);
      out += it == table.end() ? tok : it->second;
      first = false;
    }
    return out;
  };
}

Lexicon load_lexicon_file(const std::string& path) {
  Lexicon lex;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("lexicon line missing TAB separator: " + line);
    lex.emplace_back(line.substr(0, tab), split_ws(line.substr(tab + 1)));
  }
  return lex;
}

void save_lexicon_file(const Lexicon& lex, const std::string& path) {
  std::string out;
  for (const auto& [key, phones] : lex) {
    out += key;
    out += '\t';
    for (size_t i = 0; i < phones.size(); ++i) {
      if (i) out += ' ';
      out += phones[i];
    }
    out += '\n';
  }
  write_text_file(path, out);
}

PhonemeInventory load_inventory_file(const std::string& path, Lang lang) {
  PhonemeInventory inv;
  inv.language = lang;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    inv.symbols.push_back(line);
  }
  while (!inv.symbols.empty() && inv.symbols.back().empty()) inv.symbols.pop_back();
  inv.rebuild_index();
  return inv;
}

void save_inventory_file(const PhonemeInventory& inv, const std::string& path) {
  std::string out;
  for (const auto& s : inv.symbols) {
    out += s;
    out += '\n';
  }
  write_text_file(path, out);
}

namespace detail {
const std::vector<std::string>& hangul_leads() { return jamo::leads(); }
const std::vector<std::string>& hangul_vowels() { return jamo::vowels(); }
const std::vector<std::string>& hangul_tails() { return jamo::tails(); }
}  // namespace detail

}  // namespace polydub::textfront

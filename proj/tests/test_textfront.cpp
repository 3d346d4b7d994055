#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "polydub/common.hpp"
#include "polydub/textfront/textfront.hpp"

using namespace polydub;
using namespace polydub::textfront;

namespace {

// Independent Unicode-arithmetic decomposition oracle. Tables written from
// the Unicode Hangul layout, deliberately separate from the implementation.
struct OracleJamo {
  std::vector<std::string> result;
};

OracleJamo oracle_decompose(uint32_t cp) {
  static const uint32_t kLeads[19] = {0x3131, 0x3132, 0x3134, 0x3137, 0x3138, 0x3139,
                                      0x3141, 0x3142, 0x3143, 0x3145, 0x3146, 0x3147,
                                      0x3148, 0x3149, 0x314A, 0x314B, 0x314C, 0x314D,
                                      0x314E};
  static const uint32_t kTails[27] = {0x3131, 0x3132, 0x3133, 0x3134, 0x3135, 0x3136,
                                      0x3137, 0x3139, 0x313A, 0x313B, 0x313C, 0x313D,
                                      0x313E, 0x313F, 0x3140, 0x3141, 0x3142, 0x3144,
                                      0x3145, 0x3146, 0x3147, 0x3148, 0x314A, 0x314B,
                                      0x314C, 0x314D, 0x314E};
  const uint32_t idx = cp - 0xAC00;
  OracleJamo o;
  o.result.push_back(utf8_encode(kLeads[idx / 588]));
  o.result.push_back(utf8_encode(0x314F + (idx % 588) / 28));
  const uint32_t tail = idx % 28;
  if (tail) o.result.push_back(utf8_encode(kTails[tail - 1]));
  return o;
}

}  // namespace

TEST_CASE("hangul decomposition matches the unicode arithmetic oracle for all 11172 syllables") {
  for (uint32_t cp = 0xAC00; cp <= 0xD7A3; ++cp) {
    auto seq = grapheme_to_phoneme(utf8_encode(cp), Lang::ko);
    auto expect = oracle_decompose(cp).result;
    REQUIRE(seq.symbols == expect);
  }
}

TEST_CASE("hangul spot checks") {
  auto seq = grapheme_to_phoneme("한", Lang::ko);
  CHECK(seq.symbols == std::vector<std::string>{"ㅎ", "ㅏ", "ㄴ"});
  auto ga = grapheme_to_phoneme("가", Lang::ko);
  CHECK(ga.symbols == std::vector<std::string>{"ㄱ", "ㅏ"});
}

TEST_CASE("clean_text drops out-of-language characters and collapses whitespace") {
  CHECK(clean_text("안녕 hello", Lang::ko) == "안녕");
  CHECK(clean_text("", Lang::en) == "");
  CHECK(clean_text("Hi,  世界!", Lang::en) == "Hi, !");
  CHECK(clean_text("a   b\t c", Lang::en) == "a b c");
  CHECK(clean_text("你好 world 123.", Lang::zh) == "你好 123.");
}

TEST_CASE("clean_text output alphabet stays inside the allowed set (fuzz)") {
  Rng rng(2024);
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<uint32_t> cps;
    const int n = rng.uniform_int(0, 40);
    for (int i = 0; i < n; ++i) {
      uint32_t cp = static_cast<uint32_t>(rng.uniform_int(1, 0x2FFFF));
      if (cp >= 0xD800 && cp <= 0xDFFF) cp = 'x';
      cps.push_back(cp);
    }
    const std::string text = utf8_encode(cps);
    for (Lang lang : kAllLangs) {
      const std::string cleaned = clean_text(text, lang);
      for (uint32_t cp : utf8_decode(cleaned)) {
        const bool ok =
            cp == ' ' || (cp >= '0' && cp <= '9') || cp == '.' || cp == ',' ||
            cp == '?' || cp == '!' || cp == '\'' || cp == '-' ||
            (lang == Lang::en && ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z'))) ||
            (lang == Lang::ko &&
             ((cp >= 0xAC00 && cp <= 0xD7A3) || (cp >= 0x3131 && cp <= 0x3163))) ||
            (lang == Lang::ja &&
             ((cp >= 0x3041 && cp <= 0x3096) || (cp >= 0x30A1 && cp <= 0x30FA) ||
              cp == 0x30FC || (cp >= 0x4E00 && cp <= 0x9FFF))) ||
            (lang == Lang::zh && cp >= 0x4E00 && cp <= 0x9FFF);
        REQUIRE(ok);
      }
      // no double spaces, no leading/trailing space
      CHECK(cleaned.find("  ") == std::string::npos);
      if (!cleaned.empty()) {
        CHECK(cleaned.front() != ' ');
        CHECK(cleaned.back() != ' ');
      }
    }
  }
}

TEST_CASE("normalize_text verbalizes numbers and abbreviations") {
  CHECK(normalize_text("3 cats", Lang::en) == "three cats");
  CHECK(normalize_text("Dr. Kim", Lang::en) == "doctor kim");
  CHECK(normalize_text("12시", Lang::ko) == "열두시");
  CHECK(normalize_text("20마리", Lang::ko) == "스무마리");
  CHECK(normalize_text("3시", Lang::ko) == "세시");
  CHECK(normalize_text("12분", Lang::ko) == "십이분");
  CHECK(normalize_text("345", Lang::ko) == "삼백사십오");
  CHECK(normalize_text("21", Lang::en) == "twenty one");
  CHECK(normalize_text("3rd time", Lang::en) == "third time");
  CHECK(normalize_text("3.5", Lang::en) == "three point five");
  CHECK(normalize_text("12", Lang::ja) == "じゅうに");
  CHECK(normalize_text("300", Lang::ja) == "さんびゃく");
  CHECK(normalize_text("12", Lang::zh) == "十二");
  CHECK(normalize_text("112", Lang::zh) == "一百一十二");
  CHECK(normalize_text("105", Lang::zh) == "一百零五");
  CHECK(normalize_text("150", Lang::zh) == "一百五十");
}

TEST_CASE("normalize_text is idempotent") {
  Rng rng(7);
  const std::vector<std::string> samples = {
      "3 cats and 12 dogs", "Dr. Kim met Mr. Lee at 3.5", "12시 30분", "그리고 7마리",
      "300円相当",          "第105",                      "hello world", "", "21st"};
  for (const auto& s : samples) {
    for (Lang lang : kAllLangs) {
      const std::string once = normalize_text(clean_text(s, lang), lang);
      const std::string twice = normalize_text(once, lang);
      CHECK(once == twice);
    }
  }
  // fuzz over cleaned random strings
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<uint32_t> cps;
    for (int i = 0; i < 24; ++i) {
      const int pick = rng.uniform_int(0, 5);
      if (pick == 0) cps.push_back(static_cast<uint32_t>(rng.uniform_int('0', '9')));
      else if (pick == 1) cps.push_back(static_cast<uint32_t>(rng.uniform_int('a', 'z')));
      else if (pick == 2) cps.push_back(' ');
      else if (pick == 3) cps.push_back(static_cast<uint32_t>(0xAC00 + rng.uniform_int(0, 11171)));
      else if (pick == 4) cps.push_back('.');
      else cps.push_back(static_cast<uint32_t>(0x3041 + rng.uniform_int(0, 0x55)));
    }
    const std::string text = utf8_encode(cps);
    for (Lang lang : kAllLangs) {
      const std::string once = normalize_text(clean_text(text, lang), lang);
      CHECK(normalize_text(once, lang) == once);
    }
  }
}

TEST_CASE("english g2p uses the lexicon with letter fallback") {
  auto seq = grapheme_to_phoneme("cat", Lang::en);
  CHECK(seq.symbols == std::vector<std::string>{"K", "AE1", "T"});
  auto hello = grapheme_to_phoneme("hello world", Lang::en);
  CHECK(hello.symbols ==
        std::vector<std::string>{"HH", "AH0", "L", "OW1", "<ws>", "W", "ER1", "L", "D"});
  // OOV words spell out
  auto oov = grapheme_to_phoneme("zq", Lang::en);
  CHECK(oov.symbols == std::vector<std::string>{"Z", "IY1", "K", "Y", "UW1"});
  CHECK_THROWS_AS(grapheme_to_phoneme("a5b", Lang::en), UnmappableGrapheme);
  try {
    grapheme_to_phoneme("ab 9", Lang::en);
    FAIL("expected UnmappableGrapheme");
  } catch (const UnmappableGrapheme& e) {
    CHECK(e.char_offset == 3);
  }
}

TEST_CASE("chinese and japanese g2p use the bundled lexicons") {
  auto ni_hao = grapheme_to_phoneme("你好", Lang::zh);
  CHECK(ni_hao.symbols == std::vector<std::string>{"ni3", "hao3"});
  auto mix = grapheme_to_phoneme("さくら日本", Lang::ja);
  CHECK(mix.symbols == std::vector<std::string>{"さ", "く", "ら", "に", "ほ", "ん"});
  // katakana folds onto hiragana
  auto kata = grapheme_to_phoneme("サクラ", Lang::ja);
  CHECK(kata.symbols == std::vector<std::string>{"さ", "く", "ら"});
  CHECK_THROWS_AS(grapheme_to_phoneme("罕", Lang::zh), UnmappableGrapheme);
}

TEST_CASE("phoneme ids round trip and unknown symbols error") {
  const auto& inv = inventory(Lang::ko);
  Rng rng(99);
  for (int iter = 0; iter < 1000; ++iter) {
    PhonemeSequence seq;
    seq.language = Lang::ko;
    const int n = rng.uniform_int(0, 24);
    for (int i = 0; i < n; ++i)
      seq.symbols.push_back(inv.symbols[static_cast<size_t>(rng.uniform_int(0, inv.size() - 1))]);
    auto ids = phonemes_to_ids(seq, inv);
    REQUIRE(ids.ids.size() == seq.symbols.size());
    auto back = ids_to_phonemes(ids, inv);
    REQUIRE(back.symbols == seq.symbols);
  }

  PhonemeSequence empty;
  empty.language = Lang::en;
  CHECK(phonemes_to_ids(empty, inventory(Lang::en)).ids.empty());

  PhonemeSequence bad;
  bad.language = Lang::en;
  bad.symbols = {"Q9"};
  CHECK_THROWS_AS(phonemes_to_ids(bad, inventory(Lang::en)), UnknownSymbol);
}

TEST_CASE("inventory layout: reserved symbols at fixed indices, unique symbols") {
  for (Lang lang : kAllLangs) {
    const auto& inv = inventory(lang);
    CHECK(inv.symbols[0] == kPadSymbol);
    CHECK(inv.symbols[1] == kBosSymbol);
    CHECK(inv.symbols[2] == kEosSymbol);
    CHECK(inv.index.size() == inv.symbols.size());
  }
  CHECK(inventory(Lang::ko).size() == 5 + 51);
}

TEST_CASE("translate: identity, stub table, unavailable") {
  clear_translator();
  CHECK(translate("hello", Lang::en, Lang::en) == "hello");
  CHECK_THROWS_AS(translate("hello", Lang::en, Lang::ja), TranslatorUnavailable);
  register_translator(make_table_translator({{"hello", "안녕"}}));
  CHECK(translate("hello", Lang::en, Lang::ko) == "안녕");
  clear_translator();
  CHECK_THROWS_AS(translate("hello", Lang::en, Lang::ko), TranslatorUnavailable);
}

TEST_CASE("lexicon and inventory file round trips") {
  const char* lex_path = "test_lexicon.tsv";
  save_lexicon_file(bundled_lexicon(Lang::en), lex_path);
  auto loaded = load_lexicon_file(lex_path);
  REQUIRE(loaded.size() == bundled_lexicon(Lang::en).size());
  CHECK(loaded == bundled_lexicon(Lang::en));

  const char* inv_path = "test_inventory.txt";
  save_inventory_file(inventory(Lang::ja), inv_path);
  auto inv = load_inventory_file(inv_path, Lang::ja);
  CHECK(inv.symbols == inventory(Lang::ja).symbols);
  CHECK(inv.content_hash() == inventory(Lang::ja).content_hash());
  std::remove(lex_path);
  std::remove(inv_path);
}

TEST_CASE("text_to_ids end to end") {
  auto ids = text_to_ids("3 cats!", Lang::en);
  // "three cats" + <sil>
  REQUIRE(!ids.ids.empty());
  CHECK(ids.symbols.front() == "TH");
  CHECK(ids.symbols.back() == kSilenceSymbol);
  for (size_t i = 0; i < ids.ids.size(); ++i)
    CHECK(inventory(Lang::en).symbols[static_cast<size_t>(ids.ids[i])] == ids.symbols[i]);
}

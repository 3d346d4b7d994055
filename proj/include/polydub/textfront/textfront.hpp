#pragma once

#include <array>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace polydub::textfront {

enum class Lang { ko, en, ja, zh };

constexpr std::array<Lang, 4> kAllLangs = {Lang::ko, Lang::en, Lang::ja, Lang::zh};

std::string to_string(Lang lang);
Lang lang_from_string(const std::string& s);
int lang_index(Lang lang);

// Reserved symbols occupy fixed inventory slots 0..2; the word-boundary and
// silence symbols follow at 3 and 4.
inline constexpr const char* kPadSymbol = "<pad>";
inline constexpr const char* kBosSymbol = "<bos>";
inline constexpr const char* kEosSymbol = "<eos>";
inline constexpr const char* kWordSepSymbol = "<ws>";
inline constexpr const char* kSilenceSymbol = "<sil>";

struct UnmappableGrapheme : std::runtime_error {
  size_t char_offset;
  std::string grapheme;
  UnmappableGrapheme(std::string g, size_t off)
      : std::runtime_error("unmappable grapheme '" + g + "' at character offset " +
                           std::to_string(off)),
        char_offset(off),
        grapheme(std::move(g)) {}
};

struct UnknownSymbol : std::runtime_error {
  explicit UnknownSymbol(const std::string& sym)
      : std::runtime_error("symbol not in inventory: " + sym) {}
};

struct TranslatorUnavailable : std::runtime_error {
  TranslatorUnavailable()
      : std::runtime_error("no translation backend registered") {}
};

struct PhonemeInventory {
  Lang language = Lang::en;
  std::vector<std::string> symbols;  // index == id
  std::unordered_map<std::string, int> index;

  int size() const { return static_cast<int>(symbols.size()); }
  bool contains(const std::string& s) const { return index.count(s) != 0; }
  int id_of(const std::string& s) const {
    auto it = index.find(s);
    if (it == index.end()) throw UnknownSymbol(s);
    return it->second;
  }
  void rebuild_index();
  // FNV-1a over "symbol\n" lines; used by checkpoints to pin the inventory.
  uint64_t content_hash() const;
};

struct PhonemeSequence {
  Lang language = Lang::en;
  std::vector<std::string> symbols;
  std::vector<int> ids;

  size_t size() const { return symbols.size(); }
  bool empty() const { return symbols.empty(); }
};

// Built-in inventory for a language (cached singleton).
const PhonemeInventory& inventory(Lang lang);

std::string clean_text(const std::string& text, Lang lang);
std::string normalize_text(const std::string& text, Lang lang);
PhonemeSequence grapheme_to_phoneme(const std::string& text, Lang lang);
PhonemeSequence phonemes_to_ids(const PhonemeSequence& seq, const PhonemeInventory& inv);
PhonemeSequence ids_to_phonemes(const PhonemeSequence& seq, const PhonemeInventory& inv);

// Full front-end: clean -> normalize -> g2p -> ids, against the built-in inventory.
PhonemeSequence text_to_ids(const std::string& text, Lang lang);

// Translation hook. The default state has no backend: translate() with
// src != dst throws TranslatorUnavailable.
using TranslateFn = std::function<std::string(const std::string&, Lang, Lang)>;
void register_translator(TranslateFn fn);
void clear_translator();
bool translator_registered();
std::string translate(const std::string& text, Lang src, Lang dst);

// A word-table translator used by tests and the CLI stub.
TranslateFn make_table_translator(std::map<std::string, std::string> table);

// File formats: lexicon "grapheme<TAB>phoneme phoneme..." per line;
// inventory one symbol per line, line number == id.
using Lexicon = std::vector<std::pair<std::string, std::vector<std::string>>>;
Lexicon load_lexicon_file(const std::string& path);
void save_lexicon_file(const Lexicon& lex, const std::string& path);
PhonemeInventory load_inventory_file(const std::string& path, Lang lang);
void save_inventory_file(const PhonemeInventory& inv, const std::string& path);

// Bundled lexicons (read-only views over embedded tables).
const Lexicon& bundled_lexicon(Lang lang);  // en/ja/zh; ko has none (algorithmic)

namespace detail {
// Hangul decomposition tables, exposed for the toy-corpus text sampler.
const std::vector<std::string>& hangul_leads();
const std::vector<std::string>& hangul_vowels();
const std::vector<std::string>& hangul_tails();  // index 0 = no tail ("")
std::string number_to_words_en(long long n);
std::string number_to_words_ko_sino(long long n);
std::string number_to_words_ko_native(int n, bool counter_form);
std::string number_to_words_ja(long long n);
std::string number_to_words_zh(long long n);
}  // namespace detail

}  // namespace polydub::textfront

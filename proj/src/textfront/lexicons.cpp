#include "polydub/textfront/lexicon_data.hpp"

#include "polydub/common.hpp"

namespace polydub::textfront::data {

// CMU-style ARPAbet entries. Keys lowercase; values space-separated phonemes.
const std::vector<std::pair<const char*, const char*>>& en_entries() {
  static const std::vector<std::pair<const char*, const char*>> kEntries = {
      {"a", "AH0"},
      {"about", "AH0 B AW1 T"},
      {"after", "AE1 F T ER0"},
      {"again", "AH0 G EH1 N"},
      {"air", "EH1 R"},
      {"all", "AO1 L"},
      {"and", "AE1 N D"},
      {"apple", "AE1 P AH0 L"},
      {"autumn", "AO1 T AH0 M"},
      {"banana", "B AH0 N AE1 N AH0"},
      {"big", "B IH1 G"},
      {"billion", "B IH1 L Y AH0 N"},
      {"bird", "B ER1 D"},
      {"blue", "B L UW1"},
      {"boat", "B OW1 T"},
      {"book", "B UH1 K"},
      {"bread", "B R EH1 D"},
      {"bright", "B R AY1 T"},
      {"brown", "B R AW1 N"},
      {"but", "B AH1 T"},
      {"buy", "B AY1"},
      {"call", "K AO1 L"},
      {"can", "K AE1 N"},
      {"cat", "K AE1 T"},
      {"cats", "K AE1 T S"},
      {"cetera", "S EH1 T ER0 AH0"},
      {"chair", "CH EH1 R"},
      {"child", "CH AY1 L D"},
      {"city", "S IH1 T IY0"},
      {"clean", "K L IY1 N"},
      {"clear", "K L IH1 R"},
      {"close", "K L OW1 Z"},
      {"cloud", "K L AW1 D"},
      {"coffee", "K AA1 F IY0"},
      {"cold", "K OW1 L D"},
      {"come", "K AH1 M"},
      {"dance", "D AE1 N S"},
      {"dark", "D AA1 R K"},
      {"day", "D EY1"},
      {"deep", "D IY1 P"},
      {"do", "D UW1"},
      {"doctor", "D AA1 K T ER0"},
      {"dog", "D AO1 G"},
      {"dogs", "D AO1 G Z"},
      {"door", "D AO1 R"},
      {"down", "D AW1 N"},
      {"dream", "D R IY1 M"},
      {"drink", "D R IH1 NG K"},
      {"ear", "IY1 R"},
      {"earth", "ER1 TH"},
      {"eat", "IY1 T"},
      {"eight", "EY1 T"},
      {"eighteen", "EY0 T IY1 N"},
      {"eighth", "EY1 T TH"},
      {"eighty", "EY1 T IY0"},
      {"eleven", "IH0 L EH1 V AH0 N"},
      {"et", "EH1 T"},
      {"eye", "AY1"},
      {"face", "F EY1 S"},
      {"fall", "F AO1 L"},
      {"fast", "F AE1 S T"},
      {"feel", "F IY1 L"},
      {"field", "F IY1 L D"},
      {"fifteen", "F IH0 F T IY1 N"},
      {"fifth", "F IH1 F TH"},
      {"fifty", "F IH1 F T IY0"},
      {"find", "F AY1 N D"},
      {"fire", "F AY1 ER0"},
      {"first", "F ER1 S T"},
      {"fish", "F IH1 SH"},
      {"five", "F AY1 V"},
      {"fly", "F L AY1"},
      {"food", "F UW1 D"},
      {"foot", "F UH1 T"},
      {"for", "F AO1 R"},
      {"forest", "F AO1 R AH0 S T"},
      {"forty", "F AO1 R T IY0"},
      {"four", "F AO1 R"},
      {"fourteen", "F AO1 R T IY1 N"},
      {"fourth", "F AO1 R TH"},
      {"friend", "F R EH1 N D"},
      {"garden", "G AA1 R D AH0 N"},
      {"give", "G IH1 V"},
      {"glass", "G L AE1 S"},
      {"go", "G OW1"},
      {"gold", "G OW1 L D"},
      {"good", "G UH1 D"},
      {"green", "G R IY1 N"},
      {"hand", "HH AE1 N D"},
      {"happy", "HH AE1 P IY0"},
      {"have", "HH AE1 V"},
      {"he", "HH IY1"},
      {"head", "HH EH1 D"},
      {"hear", "HH IY1 R"},
      {"heart", "HH AA1 R T"},
      {"hello", "HH AH0 L OW1"},
      {"help", "HH EH1 L P"},
      {"here", "HH IY1 R"},
      {"high", "HH AY1"},
      {"hill", "HH IH1 L"},
      {"home", "HH OW1 M"},
      {"hot", "HH AA1 T"},
      {"hour", "AW1 ER0"},
      {"house", "HH AW1 S"},
      {"hundred", "HH AH1 N D R AH0 D"},
      {"i", "AY1"},
      {"ice", "AY1 S"},
      {"in", "IH0 N"},
      {"is", "IH1 Z"},
      {"it", "IH1 T"},
      {"jump", "JH AH1 M P"},
      {"kind", "K AY1 N D"},
      {"know", "N OW1"},
      {"lake", "L EY1 K"},
      {"large", "L AA1 R JH"},
      {"learn", "L ER1 N"},
      {"light", "L AY1 T"},
      {"like", "L AY1 K"},
      {"listen", "L IH1 S AH0 N"},
      {"little", "L IH1 T AH0 L"},
      {"long", "L AO1 NG"},
      {"look", "L UH1 K"},
      {"love", "L AH1 V"},
      {"make", "M EY1 K"},
      {"man", "M AE1 N"},
      {"many", "M EH1 N IY0"},
      {"me", "M IY1"},
      {"milk", "M IH1 L K"},
      {"million", "M IH1 L Y AH0 N"},
      {"minute", "M IH1 N AH0 T"},
      {"missus", "M IH1 S IH0 Z"},
      {"mister", "M IH1 S T ER0"},
      {"month", "M AH1 N TH"},
      {"moon", "M UW1 N"},
      {"morning", "M AO1 R N IH0 NG"},
      {"mountain", "M AW1 N T AH0 N"},
      {"mouth", "M AW1 TH"},
      {"music", "M Y UW1 Z IH0 K"},
      {"need", "N IY1 D"},
      {"new", "N UW1"},
      {"night", "N AY1 T"},
      {"nine", "N AY1 N"},
      {"nineteen", "N AY1 N T IY1 N"},
      {"ninety", "N AY1 N T IY0"},
      {"ninth", "N AY1 N TH"},
      {"no", "N OW1"},
      {"north", "N AO1 R TH"},
      {"nose", "N OW1 Z"},
      {"now", "N AW1"},
      {"number", "N AH1 M B ER0"},
      {"ocean", "OW1 SH AH0 N"},
      {"of", "AH1 V"},
      {"old", "OW1 L D"},
      {"on", "AA1 N"},
      {"one", "W AH1 N"},
      {"open", "OW1 P AH0 N"},
      {"orange", "AO1 R AH0 N JH"},
      {"paper", "P EY1 P ER0"},
      {"play", "P L EY1"},
      {"point", "P OY1 N T"},
      {"rain", "R EY1 N"},
      {"read", "R IY1 D"},
      {"red", "R EH1 D"},
      {"river", "R IH1 V ER0"},
      {"road", "R OW1 D"},
      {"rock", "R AA1 K"},
      {"run", "R AH1 N"},
      {"sad", "S AE1 D"},
      {"saint", "S EY1 N T"},
      {"sea", "S IY1"},
      {"second", "S EH1 K AH0 N D"},
      {"see", "S IY1"},
      {"seven", "S EH1 V AH0 N"},
      {"seventeen", "S EH1 V AH0 N T IY1 N"},
      {"seventh", "S EH1 V AH0 N TH"},
      {"seventy", "S EH1 V AH0 N T IY0"},
      {"she", "SH IY1"},
      {"silver", "S IH1 L V ER0"},
      {"sing", "S IH1 NG"},
      {"six", "S IH1 K S"},
      {"sixteen", "S IH0 K S T IY1 N"},
      {"sixth", "S IH1 K S TH"},
      {"sixty", "S IH1 K S T IY0"},
      {"sky", "S K AY1"},
      {"sleep", "S L IY1 P"},
      {"slow", "S L OW1"},
      {"small", "S M AO1 L"},
      {"snow", "S N OW1"},
      {"song", "S AO1 NG"},
      {"sound", "S AW1 N D"},
      {"speak", "S P IY1 K"},
      {"spring", "S P R IH1 NG"},
      {"star", "S T AA1 R"},
      {"stone", "S T OW1 N"},
      {"summer", "S AH1 M ER0"},
      {"sun", "S AH1 N"},
      {"sweet", "S W IY1 T"},
      {"table", "T EY1 B AH0 L"},
      {"take", "T EY1 K"},
      {"talk", "T AO1 K"},
      {"tea", "T IY1"},
      {"teach", "T IY1 CH"},
      {"ten", "T EH1 N"},
      {"tenth", "T EH1 N TH"},
      {"thank", "TH AE1 NG K"},
      {"that", "DH AE1 T"},
      {"the", "DH AH0"},
      {"there", "DH EH1 R"},
      {"they", "DH EY1"},
      {"think", "TH IH1 NG K"},
      {"third", "TH ER1 D"},
      {"thirteen", "TH ER1 T IY1 N"},
      {"thirty", "TH ER1 T IY0"},
      {"this", "DH IH1 S"},
      {"thousand", "TH AW1 Z AH0 N D"},
      {"three", "TH R IY1"},
      {"time", "T AY1 M"},
      {"to", "T UW1"},
      {"today", "T AH0 D EY1"},
      {"tomorrow", "T AH0 M AA1 R OW0"},
      {"town", "T AW1 N"},
      {"tree", "T R IY1"},
      {"twelve", "T W EH1 L V"},
      {"twenty", "T W EH1 N T IY0"},
      {"two", "T UW1"},
      {"up", "AH1 P"},
      {"versus", "V ER1 S AH0 Z"},
      {"voice", "V OY1 S"},
      {"walk", "W AO1 K"},
      {"want", "W AA1 N T"},
      {"warm", "W AO1 R M"},
      {"water", "W AO1 T ER0"},
      {"we", "W IY1"},
      {"week", "W IY1 K"},
      {"west", "W EH1 S T"},
      {"white", "W AY1 T"},
      {"wind", "W IH1 N D"},
      {"window", "W IH1 N D OW0"},
      {"winter", "W IH1 N T ER0"},
      {"with", "W IH1 DH"},
      {"woman", "W UH1 M AH0 N"},
      {"work", "W ER1 K"},
      {"world", "W ER1 L D"},
      {"write", "R AY1 T"},
      {"year", "Y IH1 R"},
      {"yellow", "Y EH1 L OW0"},
      {"yesterday", "Y EH1 S T ER0 D EY2"},
      {"you", "Y UW1"},
      {"zero", "Z IY1 R OW0"},
  };
  return kEntries;
}

// Letter-name pronunciations for the out-of-vocabulary spelling fallback.
const std::vector<std::pair<const char*, const char*>>& en_letter_entries() {
  static const std::vector<std::pair<const char*, const char*>> kLetters = {
      {"a", "EY1"},          {"b", "B IY1"},     {"c", "S IY1"},
      {"d", "D IY1"},        {"e", "IY1"},       {"f", "EH1 F"},
      {"g", "JH IY1"},       {"h", "EY1 CH"},    {"i", "AY1"},
      {"j", "JH EY1"},       {"k", "K EY1"},     {"l", "EH1 L"},
      {"m", "EH1 M"},        {"n", "EH1 N"},     {"o", "OW1"},
      {"p", "P IY1"},        {"q", "K Y UW1"},   {"r", "AA1 R"},
      {"s", "EH1 S"},        {"t", "T IY1"},     {"u", "Y UW1"},
      {"v", "V IY1"},        {"w", "D AH1 B AH0 L Y UW0"},
      {"x", "EH1 K S"},      {"y", "W AY1"},     {"z", "Z IY1"},
  };
  return kLetters;
}

const std::vector<std::pair<const char*, const char*>>& en_abbreviations() {
  static const std::vector<std::pair<const char*, const char*>> kAbbr = {
      {"dr.", "doctor"}, {"mr.", "mister"},   {"mrs.", "missus"},
      {"st.", "saint"},  {"vs.", "versus"},   {"etc.", "et cetera"},
      {"no.", "number"},
  };
  return kAbbr;
}

// Kanji/compound readings in hiragana; split into kana at load.
const std::vector<std::pair<const char*, const char*>>& ja_entries() {
  static const std::vector<std::pair<const char*, const char*>> kEntries = {
      {"日本", "にほん"},     {"東京", "とうきょう"}, {"時間", "じかん"},
      {"時", "じ"},           {"人", "ひと"},         {"水", "みず"},
      {"火", "ひ"},           {"木", "き"},           {"山", "やま"},
      {"川", "かわ"},         {"空", "そら"},         {"海", "うみ"},
      {"犬", "いぬ"},         {"猫", "ねこ"},         {"鳥", "とり"},
      {"魚", "さかな"},       {"花", "はな"},         {"月", "つき"},
      {"星", "ほし"},         {"雨", "あめ"},         {"雪", "ゆき"},
      {"風", "かぜ"},         {"朝", "あさ"},         {"昼", "ひる"},
      {"夜", "よる"},         {"今日", "きょう"},     {"明日", "あした"},
      {"昨日", "きのう"},     {"先生", "せんせい"},   {"学生", "がくせい"},
      {"学校", "がっこう"},   {"友達", "ともだち"},   {"家", "いえ"},
      {"車", "くるま"},       {"道", "みち"},         {"町", "まち"},
      {"国", "くに"},         {"言葉", "ことば"},     {"名前", "なまえ"},
      {"電話", "でんわ"},     {"音楽", "おんがく"},   {"映画", "えいが"},
      {"本", "ほん"},         {"手", "て"},           {"足", "あし"},
      {"目", "め"},           {"耳", "みみ"},         {"口", "くち"},
      {"頭", "あたま"},       {"心", "こころ"},       {"声", "こえ"},
      {"歌", "うた"},         {"春", "はる"},         {"夏", "なつ"},
      {"秋", "あき"},         {"冬", "ふゆ"},         {"年", "とし"},
      {"分", "ふん"},         {"秒", "びょう"},       {"白", "しろ"},
      {"黒", "くろ"},         {"赤", "あか"},         {"青", "あお"},
      {"緑", "みどり"},       {"大きい", "おおきい"}, {"小さい", "ちいさい"},
      {"新しい", "あたらしい"}, {"古い", "ふるい"},   {"高い", "たかい"},
      {"安い", "やすい"},     {"早い", "はやい"},     {"遅い", "おそい"},
      {"良い", "よい"},       {"悪い", "わるい"},     {"食べる", "たべる"},
      {"飲む", "のむ"},       {"見る", "みる"},       {"聞く", "きく"},
      {"話す", "はなす"},     {"読む", "よむ"},       {"書く", "かく"},
      {"行く", "いく"},       {"来る", "くる"},       {"帰る", "かえる"},
      {"歩く", "あるく"},     {"走る", "はしる"},     {"泳ぐ", "およぐ"},
      {"飛ぶ", "とぶ"},       {"寝る", "ねる"},       {"起きる", "おきる"},
      {"笑う", "わらう"},     {"泣く", "なく"},       {"会う", "あう"},
      {"待つ", "まつ"},       {"買う", "かう"},       {"売る", "うる"},
      {"作る", "つくる"},     {"使う", "つかう"},     {"今", "いま"},
      {"何", "なに"},         {"誰", "だれ"},         {"私", "わたし"},
      {"馬", "うま"},         {"牛", "うし"},         {"羊", "ひつじ"},
      {"豚", "ぶた"},         {"雲", "くも"},         {"森", "もり"},
      {"林", "はやし"},       {"石", "いし"},         {"砂", "すな"},
      {"光", "ひかり"},       {"影", "かげ"},         {"夢", "ゆめ"},
      {"金", "かね"},         {"銀", "ぎん"},         {"茶", "ちゃ"},
      {"米", "こめ"},         {"酒", "さけ"},         {"塩", "しお"},
      {"砂糖", "さとう"},
  };
  return kEntries;
}

// Character (and a few word) readings as tone-numbered pinyin.
const std::vector<std::pair<const char*, const char*>>& zh_entries() {
  static const std::vector<std::pair<const char*, const char*>> kEntries = {
      {"你好", "ni3 hao3"}, {"你", "ni3"},   {"好", "hao3"},  {"我", "wo3"},
      {"他", "ta1"},        {"她", "ta1"},   {"是", "shi4"},  {"不", "bu4"},
      {"人", "ren2"},       {"大", "da4"},   {"小", "xiao3"}, {"山", "shan1"},
      {"水", "shui3"},      {"火", "huo3"},  {"天", "tian1"}, {"地", "di4"},
      {"日", "ri4"},        {"月", "yue4"},  {"星", "xing1"}, {"风", "feng1"},
      {"雨", "yu3"},        {"雪", "xue3"},  {"花", "hua1"},  {"草", "cao3"},
      {"树", "shu4"},       {"鸟", "niao3"}, {"鱼", "yu2"},   {"猫", "mao1"},
      {"狗", "gou3"},       {"马", "ma3"},   {"牛", "niu2"},  {"羊", "yang2"},
      {"家", "jia1"},       {"国", "guo2"},  {"中", "zhong1"},{"学", "xue2"},
      {"生", "sheng1"},     {"老", "lao3"},  {"师", "shi1"},  {"朋", "peng2"},
      {"友", "you3"},       {"爱", "ai4"},   {"心", "xin1"},  {"手", "shou3"},
      {"口", "kou3"},       {"目", "mu4"},   {"耳", "er3"},   {"头", "tou2"},
      {"脚", "jiao3"},      {"走", "zou3"},  {"跑", "pao3"},  {"飞", "fei1"},
      {"吃", "chi1"},       {"喝", "he1"},   {"看", "kan4"},  {"听", "ting1"},
      {"说", "shuo1"},      {"读", "du2"},   {"写", "xie3"},  {"上", "shang4"},
      {"下", "xia4"},       {"左", "zuo3"},  {"右", "you4"},  {"前", "qian2"},
      {"后", "hou4"},       {"东", "dong1"}, {"南", "nan2"},  {"西", "xi1"},
      {"北", "bei3"},       {"春", "chun1"}, {"夏", "xia4"},  {"秋", "qiu1"},
      {"冬", "dong1"},      {"年", "nian2"}, {"时", "shi2"},  {"分", "fen1"},
      {"白", "bai2"},       {"黑", "hei1"},  {"红", "hong2"}, {"绿", "lv4"},
      {"蓝", "lan2"},       {"黄", "huang2"},{"早", "zao3"},  {"晚", "wan3"},
      {"今", "jin1"},       {"明", "ming2"}, {"来", "lai2"},  {"去", "qu4"},
      {"到", "dao4"},       {"在", "zai4"},  {"有", "you3"},  {"无", "wu2"},
      {"多", "duo1"},       {"少", "shao3"}, {"高", "gao1"},  {"低", "di1"},
      {"长", "chang2"},     {"短", "duan3"}, {"新", "xin1"},  {"旧", "jiu4"},
      {"快", "kuai4"},      {"慢", "man4"},  {"冷", "leng3"}, {"热", "re4"},
      {"一", "yi1"},        {"二", "er4"},   {"三", "san1"},  {"四", "si4"},
      {"五", "wu3"},        {"六", "liu4"},  {"七", "qi1"},   {"八", "ba1"},
      {"九", "jiu3"},       {"十", "shi2"},  {"百", "bai3"},  {"千", "qian1"},
      {"万", "wan4"},       {"零", "ling2"}, {"门", "men2"},  {"窗", "chuang1"},
      {"书", "shu1"},       {"车", "che1"},  {"路", "lu4"},   {"桥", "qiao2"},
      {"城", "cheng2"},     {"村", "cun1"},  {"田", "tian2"}, {"米", "mi3"},
      {"茶", "cha2"},       {"酒", "jiu3"},  {"肉", "rou4"},  {"菜", "cai4"},
      {"果", "guo3"},       {"甜", "tian2"}, {"苦", "ku3"},   {"海", "hai3"},
      {"河", "he2"},        {"湖", "hu2"},   {"云", "yun2"},  {"雷", "lei2"},
      {"电", "dian4"},      {"声", "sheng1"},{"音", "yin1"},  {"乐", "yue4"},
      {"歌", "ge1"},        {"画", "hua4"},  {"字", "zi4"},   {"词", "ci2"},
      {"句", "ju4"},        {"文", "wen2"},  {"语", "yu3"},   {"话", "hua4"},
  };
  return kEntries;
}

}  // namespace polydub::textfront::data

#pragma once

#include <utility>
#include <vector>

namespace polydub::textfront::data {

const std::vector<std::pair<const char*, const char*>>& en_entries();
const std::vector<std::pair<const char*, const char*>>& en_letter_entries();
const std::vector<std::pair<const char*, const char*>>& en_abbreviations();
const std::vector<std::pair<const char*, const char*>>& ja_entries();
const std::vector<std::pair<const char*, const char*>>& zh_entries();

}  // namespace polydub::textfront::data

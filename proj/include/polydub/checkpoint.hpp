#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "polydub/nn/tensor.hpp"

namespace polydub::ckpt {

// Single-file model archive: config echo, named parameter tensors, speaker
// and language tables, and phoneme-inventory hashes.
struct Container {
  std::map<std::string, std::string> config;
  std::vector<std::pair<std::string, nn::Tensor>> tensors;
  std::vector<std::pair<std::string, std::string>> speakers;  // id -> native lang
  std::vector<std::string> languages;                         // embedding row order
  std::vector<std::pair<std::string, uint64_t>> inventory_hashes;
};

void save_container(const Container& c, const std::string& path);
Container load_container(const std::string& path);

struct BadCheckpoint : std::runtime_error {
  explicit BadCheckpoint(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace polydub::ckpt

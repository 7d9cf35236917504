#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "s2smix/tokens.hpp"

namespace s2smix {

// Bidirectional token<->id map with fixed reserved ids 0..3
// (<pad>, <bos>, <eos>, <unk>).
class Vocabulary {
 public:
  Vocabulary();

  // Appends a non-reserved token; returns its id. Duplicate -> existing id.
  int add(const std::string& token);
  // Lookup; unknown tokens map to kUnkId.
  int id(const std::string& token) const;
  // Lookup that refuses unknown tokens (closed-vocabulary contexts).
  int id_strict(const std::string& token) const;
  bool contains(const std::string& token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  std::vector<int> encode(const std::vector<std::string>& tokens, bool strict = false) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  // Non-reserved tokens in id order (for serialization).
  std::vector<std::string> regular_tokens() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace s2smix

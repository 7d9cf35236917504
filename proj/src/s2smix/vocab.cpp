#include "s2smix/vocab.hpp"

#include "s2smix/error.hpp"

namespace s2smix {

Vocabulary::Vocabulary() {
  tokens_ = {kPadToken, kBosToken, kEosToken, kUnkToken};
  for (int i = 0; i < kNumReservedIds; ++i) index_[tokens_[static_cast<size_t>(i)]] = i;
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_[token] = id;
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

int Vocabulary::id_strict(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw DataError("token not in vocabulary: '" + token + "'");
  return it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(token) > 0;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw DataError("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens, bool strict) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(strict ? id_strict(t) : id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

std::vector<std::string> Vocabulary::regular_tokens() const {
  return std::vector<std::string>(tokens_.begin() + kNumReservedIds, tokens_.end());
}

}  // namespace s2smix

#pragma once

namespace s2smix {

// Reserved vocabulary ids, fixed across every corpus and model.
constexpr int kPadId = 0;
constexpr int kBosId = 1;
constexpr int kEosId = 2;
constexpr int kUnkId = 3;
constexpr int kNumReservedIds = 4;

constexpr const char* kPadToken = "<pad>";
constexpr const char* kBosToken = "<bos>";
constexpr const char* kEosToken = "<eos>";
constexpr const char* kUnkToken = "<unk>";

}  // namespace s2smix

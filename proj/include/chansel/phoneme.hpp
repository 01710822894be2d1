#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chansel {

using PhonemeId = std::uint16_t;

enum class PhonemeKind { vowel, consonant, silence };

std::string_view to_string(PhonemeKind kind);

/// One inventory entry. Empty feature strings mean "not applicable".
struct Phoneme {
  std::string symbol;
  PhonemeKind kind = PhonemeKind::silence;
  std::string voicing;
  std::string manner;
  std::string place;
  std::string height;
  std::string backness;
  std::string rounding;
};

/**
 * Phoneme inventory plus the linguistic / articulatory category predicates
 * used for grouped error analysis.
 *
 * Category names: vowel, consonant, silence, voiced, voiceless,
 * manner_<x>, place_<x>, vowel_<height>, vowel_<backness>, vowel_<rounding>.
 * Each consonant carries exactly one manner and place; each vowel exactly one
 * height, backness and rounding. Immutable after construction.
 */
class CategoryTable {
public:
  /// Built-in 39-symbol ARPABET set plus SIL.
  static const CategoryTable &arpabet();
  static CategoryTable from_csv(std::string_view csv_text);
  static CategoryTable load(const std::filesystem::path &path);

  std::size_t size() const noexcept { return phonemes_.size(); }
  const Phoneme &phoneme(PhonemeId id) const { return phonemes_.at(id); }
  std::span<const Phoneme> phonemes() const noexcept { return phonemes_; }

  PhonemeId id_of(std::string_view symbol) const;
  std::optional<PhonemeId> find(std::string_view symbol) const;
  const std::string &symbol(PhonemeId id) const { return phonemes_.at(id).symbol; }

  /// Category names in canonical report order.
  const std::vector<std::string> &categories() const noexcept { return categories_; }
  std::size_t category_index(std::string_view name) const;

  std::vector<std::string> categories_of(std::string_view symbol) const;
  /// Category indices for a phoneme id; hot path for aggregation.
  std::span<const std::size_t> category_indices(PhonemeId id) const {
    return membership_.at(id);
  }
  std::vector<std::string> category_members(std::string_view name) const;

  std::string to_csv() const;

private:
  explicit CategoryTable(std::vector<Phoneme> phonemes);

  std::vector<Phoneme> phonemes_;
  std::vector<std::string> categories_;
  std::vector<std::vector<std::size_t>> membership_;
};

} // namespace chansel

#include "chansel/phoneme.hpp"

#include "binary_io.hpp"
#include "chansel/error.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <sstream>

namespace chansel {

namespace {

// Mirror of data/arpabet.csv, kept in sync by a unit test.
constexpr std::string_view kArpabetCsv = R"(symbol,kind,voicing,manner,place,height,backness,rounding
SIL,silence,,,,,,
AA,vowel,voiced,,,low,back,unrounded
AE,vowel,voiced,,,low,front,unrounded
AH,vowel,voiced,,,mid,central,unrounded
AO,vowel,voiced,,,mid,back,rounded
AW,vowel,voiced,,,low,central,unrounded
AY,vowel,voiced,,,low,central,unrounded
EH,vowel,voiced,,,mid,front,unrounded
ER,vowel,voiced,,,mid,central,unrounded
EY,vowel,voiced,,,mid,front,unrounded
IH,vowel,voiced,,,high,front,unrounded
IY,vowel,voiced,,,high,front,unrounded
OW,vowel,voiced,,,mid,back,rounded
OY,vowel,voiced,,,mid,back,rounded
UH,vowel,voiced,,,high,back,rounded
UW,vowel,voiced,,,high,back,rounded
B,consonant,voiced,plosive,bilabial,,,
CH,consonant,voiceless,affricate,postalveolar,,,
D,consonant,voiced,plosive,alveolar,,,
DH,consonant,voiced,fricative,alveolar,,,
F,consonant,voiceless,fricative,labiodental,,,
G,consonant,voiced,plosive,velar,,,
HH,consonant,voiceless,fricative,glottal,,,
JH,consonant,voiced,affricate,postalveolar,,,
K,consonant,voiceless,plosive,velar,,,
L,consonant,voiced,liquid,alveolar,,,
M,consonant,voiced,nasal,bilabial,,,
N,consonant,voiced,nasal,alveolar,,,
NG,consonant,voiced,nasal,velar,,,
P,consonant,voiceless,plosive,bilabial,,,
R,consonant,voiced,liquid,alveolar,,,
S,consonant,voiceless,fricative,alveolar,,,
SH,consonant,voiceless,fricative,postalveolar,,,
T,consonant,voiceless,plosive,alveolar,,,
TH,consonant,voiceless,fricative,alveolar,,,
V,consonant,voiced,fricative,labiodental,,,
W,consonant,voiced,glide,labiovelar,,,
Y,consonant,voiced,glide,palatal,,,
Z,consonant,voiced,fricative,alveolar,,,
ZH,consonant,voiced,fricative,postalveolar,,,
)";

constexpr std::array kColumns = {"symbol", "kind",   "voicing",  "manner",
                                 "place",  "height", "backness", "rounding"};

// Canonical value order per feature group; unknown values sort after these.
const std::map<std::string, std::vector<std::string>> &canonical_values() {
  static const std::map<std::string, std::vector<std::string>> values = {
      {"voicing", {"voiced", "voiceless"}},
      {"manner", {"liquid", "fricative", "nasal", "plosive", "affricate", "glide"}},
      {"place",
       {"bilabial", "alveolar", "labiodental", "velar", "postalveolar", "glottal", "labiovelar",
        "palatal"}},
      {"height", {"high", "mid", "low"}},
      {"backness", {"front", "central", "back"}},
      {"rounding", {"rounded", "unrounded"}},
  };
  return values;
}

std::string category_name(const std::string &feature, const std::string &value) {
  if (feature == "voicing")
    return value;
  if (feature == "manner" || feature == "place")
    return feature + "_" + value;
  return "vowel_" + value;
}

const std::string &feature_value(const Phoneme &p, const std::string &feature) {
  if (feature == "voicing")
    return p.voicing;
  if (feature == "manner")
    return p.manner;
  if (feature == "place")
    return p.place;
  if (feature == "height")
    return p.height;
  if (feature == "backness")
    return p.backness;
  return p.rounding;
}

constexpr std::array kFeatureOrder = {"voicing", "manner", "place", "height", "backness",
                                      "rounding"};

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ','))
    cells.push_back(cell);
  if (!line.empty() && line.back() == ',')
    cells.emplace_back();
  for (auto &c : cells) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' '))
      c.pop_back();
    while (!c.empty() && c.front() == ' ')
      c.erase(c.begin());
  }
  return cells;
}

} // namespace

std::string_view to_string(PhonemeKind kind) {
  switch (kind) {
  case PhonemeKind::vowel:
    return "vowel";
  case PhonemeKind::consonant:
    return "consonant";
  case PhonemeKind::silence:
    return "silence";
  }
  return "silence";
}

CategoryTable::CategoryTable(std::vector<Phoneme> phonemes) : phonemes_(std::move(phonemes)) {
  if (phonemes_.empty())
    throw ConfigError("phoneme inventory is empty");
  std::set<std::string> seen;
  for (const auto &p : phonemes_) {
    if (p.symbol.empty())
      throw ConfigError("phoneme with empty symbol");
    if (!seen.insert(p.symbol).second)
      throw ConfigError("duplicate phoneme symbol " + p.symbol);
    const bool consonant = p.kind == PhonemeKind::consonant;
    const bool vowel = p.kind == PhonemeKind::vowel;
    if (consonant && (p.manner.empty() || p.place.empty()))
      throw ConfigError("consonant " + p.symbol + " needs exactly one manner and one place");
    if (vowel && (p.height.empty() || p.backness.empty() || p.rounding.empty()))
      throw ConfigError("vowel " + p.symbol + " needs height, backness and rounding");
    if (!consonant && (!p.manner.empty() || !p.place.empty()))
      throw ConfigError(p.symbol + ": manner/place apply only to consonants");
    if (!vowel && (!p.height.empty() || !p.backness.empty() || !p.rounding.empty()))
      throw ConfigError(p.symbol + ": height/backness/rounding apply only to vowels");
    if (p.kind == PhonemeKind::silence && !p.voicing.empty())
      throw ConfigError("silence symbol " + p.symbol + " cannot carry voicing");
  }
  if (phonemes_.size() > 65535)
    throw ConfigError("phoneme inventory too large");

  // Category list in canonical order, keeping only categories with members.
  categories_ = {"vowel", "consonant", "silence"};
  for (const std::string feature : kFeatureOrder) {
    std::vector<std::string> values = canonical_values().at(feature);
    std::set<std::string> extra;
    for (const auto &p : phonemes_) {
      const auto &v = feature_value(p, feature);
      if (!v.empty() && std::find(values.begin(), values.end(), v) == values.end())
        extra.insert(v);
    }
    values.insert(values.end(), extra.begin(), extra.end());
    for (const auto &v : values) {
      bool used = std::any_of(phonemes_.begin(), phonemes_.end(),
                              [&](const Phoneme &p) { return feature_value(p, feature) == v; });
      if (used)
        categories_.push_back(category_name(feature, v));
    }
  }

  membership_.resize(phonemes_.size());
  for (std::size_t i = 0; i < phonemes_.size(); ++i) {
    const auto &p = phonemes_[i];
    std::vector<std::string> names{std::string(to_string(p.kind))};
    for (const std::string feature : kFeatureOrder) {
      const auto &v = feature_value(p, feature);
      if (!v.empty())
        names.push_back(category_name(feature, v));
    }
    for (const auto &n : names)
      membership_[i].push_back(category_index(n));
    std::sort(membership_[i].begin(), membership_[i].end());
  }
}

const CategoryTable &CategoryTable::arpabet() {
  static const CategoryTable table = from_csv(kArpabetCsv);
  return table;
}

CategoryTable CategoryTable::from_csv(std::string_view csv_text) {
  std::istringstream in{std::string(csv_text)};
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("taxonomy CSV is empty");
  auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i)
    col[header[i]] = i;
  for (auto name : kColumns) {
    if (!col.contains(name))
      throw ParseError(std::string("taxonomy CSV lacks column '") + name + "'");
  }
  std::vector<Phoneme> phonemes;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r")
      continue;
    auto cells = split_csv_line(line);
    cells.resize(std::max(cells.size(), header.size()));
    Phoneme p;
    p.symbol = cells[col["symbol"]];
    const auto &kind = cells[col["kind"]];
    if (kind == "vowel")
      p.kind = PhonemeKind::vowel;
    else if (kind == "consonant")
      p.kind = PhonemeKind::consonant;
    else if (kind == "silence")
      p.kind = PhonemeKind::silence;
    else
      throw ParseError("taxonomy line " + std::to_string(line_no) + ": unknown kind '" + kind +
                       "'");
    p.voicing = cells[col["voicing"]];
    p.manner = cells[col["manner"]];
    p.place = cells[col["place"]];
    p.height = cells[col["height"]];
    p.backness = cells[col["backness"]];
    p.rounding = cells[col["rounding"]];
    phonemes.push_back(std::move(p));
  }
  return CategoryTable(std::move(phonemes));
}

CategoryTable CategoryTable::load(const std::filesystem::path &path) {
  return from_csv(detail::read_text(path));
}

std::optional<PhonemeId> CategoryTable::find(std::string_view symbol) const {
  for (std::size_t i = 0; i < phonemes_.size(); ++i) {
    if (phonemes_[i].symbol == symbol)
      return static_cast<PhonemeId>(i);
  }
  return std::nullopt;
}

PhonemeId CategoryTable::id_of(std::string_view symbol) const {
  if (auto id = find(symbol))
    return *id;
  throw LookupError("unknown phoneme symbol '" + std::string(symbol) + "'");
}

std::size_t CategoryTable::category_index(std::string_view name) const {
  auto it = std::find(categories_.begin(), categories_.end(), name);
  if (it == categories_.end())
    throw LookupError("unknown phoneme category '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - categories_.begin());
}

std::vector<std::string> CategoryTable::categories_of(std::string_view symbol) const {
  std::vector<std::string> out;
  for (auto idx : membership_[id_of(symbol)])
    out.push_back(categories_[idx]);
  return out;
}

std::vector<std::string> CategoryTable::category_members(std::string_view name) const {
  const auto idx = category_index(name);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < phonemes_.size(); ++i) {
    if (std::binary_search(membership_[i].begin(), membership_[i].end(), idx))
      out.push_back(phonemes_[i].symbol);
  }
  return out;
}

std::string CategoryTable::to_csv() const {
  std::string out = "symbol,kind,voicing,manner,place,height,backness,rounding\n";
  for (const auto &p : phonemes_) {
    out += p.symbol + "," + std::string(to_string(p.kind)) + "," + p.voicing + "," + p.manner +
           "," + p.place + "," + p.height + "," + p.backness + "," + p.rounding + "\n";
  }
  return out;
}

} // namespace chansel

#include "chansel/corpus.hpp"

#include "binary_io.hpp"
#include "chansel/error.hpp"
#include "chansel/hash.hpp"
#include "chansel/version.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace chansel {

using nlohmann::json;

TokenSequence collapse_to_words(std::span<const PhonemeId> labels, const CategoryTable &table) {
  TokenSequence words;
  std::string current;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0 && labels[i] == labels[i - 1])
      continue;
    const auto &p = table.phoneme(labels[i]);
    if (p.kind == PhonemeKind::silence) {
      if (!current.empty())
        words.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (!current.empty())
      current.push_back('-');
    current += p.symbol;
  }
  if (!current.empty())
    words.push_back(std::move(current));
  return words;
}

std::size_t Corpus::channels() const {
  return utterances.empty() ? 0 : utterances.front().signal.channels();
}

std::size_t Corpus::frames() const {
  std::size_t n = 0;
  for (const auto &u : utterances)
    n += u.labels.size();
  return n;
}

Corpus Corpus::restricted(const ChannelSubset &subset) const {
  Corpus out{table, classes, {}};
  out.utterances.reserve(utterances.size());
  for (const auto &u : utterances)
    out.utterances.push_back({restrict_to_subset(u.signal, subset), u.labels, u.transcript});
  return out;
}

void Corpus::validate() const {
  if (!table)
    throw ConfigError("corpus has no phoneme table");
  if (classes.size() < 2)
    throw ConfigError("corpus needs at least two classes");
  if (table->phoneme(classes.front()).kind != PhonemeKind::silence)
    throw ConfigError("class 0 must be the silence class");
  if (utterances.empty())
    throw ConfigError("corpus has no utterances");
  const std::size_t c = channels();
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const auto &u = utterances[i];
    const auto where = "utterance " + std::to_string(i);
    if (u.signal.channels() != c)
      throw ShapeError(where + " has " + std::to_string(u.signal.channels()) + " channels, expected " +
                       std::to_string(c));
    if (u.labels.size() != u.signal.samples())
      throw ShapeError(where + ": label count differs from frame count");
    for (auto id : u.labels) {
      if (std::find(classes.begin(), classes.end(), id) == classes.end())
        throw ConfigError(where + ": label " + table->symbol(id) + " is not a corpus class");
    }
    if (u.transcript != collapse_to_words(u.labels, *table))
      throw ConfigError(where + ": transcript does not match collapsed frame labels");
  }
}

std::string corpus_hash(const Corpus &corpus) {
  Hasher h;
  h.update("chansel-corpus-v1\n");
  for (auto id : corpus.classes)
    h.update(corpus.table->symbol(id)).update(",");
  for (const auto &u : corpus.utterances) {
    h.update("\nutt " + std::to_string(u.signal.channels()) + " " +
             std::to_string(u.signal.samples()) + "\n");
    h.update(u.signal.data());
    for (auto id : u.labels)
      h.update(corpus.table->symbol(id)).update(" ");
  }
  return h.hex_digest();
}

CorpusSplit split_corpus(const Corpus &corpus, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test fraction must lie in (0, 1)");
  const std::size_t n = corpus.utterances.size();
  const auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n)
    throw ConfigError("corpus of " + std::to_string(n) + " utterances is too small to split");
  CorpusSplit out{{corpus.table, corpus.classes, {}}, {corpus.table, corpus.classes, {}}};
  for (std::size_t i = 0; i < n; ++i)
    (i < n - n_test ? out.train : out.test).utterances.push_back(corpus.utterances[i]);
  return out;
}

namespace {
std::string utterance_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "utt_%04zu", i);
  return buf;
}
} // namespace

void write_corpus(const Corpus &corpus, const std::filesystem::path &dir,
                  const json &generator_config) {
  corpus.validate();
  std::filesystem::create_directories(dir);
  json classes = json::array();
  for (auto id : corpus.classes)
    classes.push_back(corpus.table->symbol(id));
  json utts = json::array();
  std::ostringstream labels;
  labels << "utterance,frame,label\n";
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    const auto &u = corpus.utterances[i];
    const auto stem = utterance_stem(i);
    write_signal(u.signal, dir / (stem + ".json"));
    utts.push_back({{"id", stem}, {"signal", stem + ".json"}, {"frames", u.labels.size()}});
    for (std::size_t t = 0; t < u.labels.size(); ++t)
      labels << stem << ',' << t << ',' << corpus.table->symbol(u.labels[t]) << '\n';
  }
  detail::write_text(dir / "labels.csv", labels.str());
  detail::write_text(dir / "taxonomy.csv", corpus.table->to_csv());
  json manifest = {{"format_version", kFormatVersion},
                   {"tool_version", kToolVersion},
                   {"corpus_hash", corpus_hash(corpus)},
                   {"channels", corpus.channels()},
                   {"frames", corpus.frames()},
                   {"classes", classes},
                   {"generator", generator_config},
                   {"utterances", utts}};
  detail::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

json read_corpus_manifest(const std::filesystem::path &dir) {
  try {
    return json::parse(detail::read_text(dir / "manifest.json"));
  } catch (const json::exception &e) {
    throw IoError("bad corpus manifest in " + dir.string() + ": " + e.what());
  }
}

Corpus read_corpus(const std::filesystem::path &dir) {
  const json manifest = read_corpus_manifest(dir);
  Corpus corpus;
  corpus.table = std::make_shared<const CategoryTable>(CategoryTable::load(dir / "taxonomy.csv"));
  for (const auto &sym : manifest.at("classes"))
    corpus.classes.push_back(corpus.table->id_of(sym.get<std::string>()));

  std::map<std::string, std::size_t> index;
  for (const auto &u : manifest.at("utterances")) {
    auto signal = read_signal(dir / u.at("signal").get<std::string>());
    index[u.at("id").get<std::string>()] = corpus.utterances.size();
    corpus.utterances.push_back({std::move(signal), {}, {}});
  }
  std::istringstream in(detail::read_text(dir / "labels.csv"));
  std::string line;
  std::getline(in, line); // header
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    if (a == std::string::npos || b == std::string::npos)
      throw ParseError("labels.csv:" + std::to_string(line_no) + ": expected 3 columns");
    auto it = index.find(line.substr(0, a));
    if (it == index.end())
      throw ParseError("labels.csv:" + std::to_string(line_no) + ": unknown utterance");
    auto &labels = corpus.utterances[it->second].labels;
    if (std::stoul(line.substr(a + 1, b - a - 1)) != labels.size())
      throw ParseError("labels.csv:" + std::to_string(line_no) + ": frames out of order");
    auto sym = line.substr(b + 1);
    if (!sym.empty() && sym.back() == '\r')
      sym.pop_back();
    labels.push_back(corpus.table->id_of(sym));
  }
  for (auto &u : corpus.utterances)
    u.transcript = collapse_to_words(u.labels, *corpus.table);
  corpus.validate();
  const auto expected = manifest.value("corpus_hash", std::string());
  if (!expected.empty() && expected != corpus_hash(corpus))
    throw IoError("corpus in " + dir.string() + " does not match its manifest hash");
  return corpus;
}

} // namespace chansel

#include "binary_io.hpp"
#include "chansel/error.hpp"
#include "chansel/search.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>

namespace chansel {

using nlohmann::json;

ResultCache::ResultCache(std::filesystem::path jsonl_path) : path_(std::move(jsonl_path)) {
  if (!path_->parent_path().empty())
    std::filesystem::create_directories(path_->parent_path());
  if (!std::filesystem::exists(*path_))
    return;
  std::istringstream in(detail::read_text(*path_));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    try {
      EvalRecord r = json::parse(line).get<EvalRecord>();
      records_.insert_or_assign(key(r.subset.label(), r.corpus_hash, r.config_hash, r.seed),
                                std::move(r));
    } catch (const std::exception &) {
      ++skipped_lines_;
    }
  }
}

std::string ResultCache::key(const std::string &subset_label, const std::string &corpus_hash,
                             const std::string &config_hash, std::uint64_t seed) {
  return subset_label + "|" + corpus_hash + "|" + config_hash + "|" + std::to_string(seed);
}

std::optional<EvalRecord> ResultCache::find(const std::string &k) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find(k);
  if (it == records_.end())
    return std::nullopt;
  return it->second;
}

void ResultCache::insert(const EvalRecord &record) {
  const std::string k =
      key(record.subset.label(), record.corpus_hash, record.config_hash, record.seed);
  std::lock_guard lock(mutex_);
  if (path_) {
    const std::string line = json(record).dump() + "\n";
    const int fd = ::open(path_->c_str(), O_RDWR | O_CREAT | O_APPEND, 0644);
    if (fd < 0)
      throw IoError("cannot open cache " + path_->string() + ": " + std::strerror(errno));
    // A partial line left by an earlier crash is terminated so this record parses.
    if (::lseek(fd, 0, SEEK_END) > 0) {
      char last = '\n';
      if (::pread(fd, &last, 1, ::lseek(fd, 0, SEEK_END) - 1) == 1 && last != '\n')
        (void)!::write(fd, "\n", 1);
    }
    const auto written = ::write(fd, line.data(), line.size());
    ::close(fd);
    if (written != static_cast<ssize_t>(line.size()))
      throw IoError("short write to cache " + path_->string());
  }
  records_.insert_or_assign(k, record);
}

std::size_t ResultCache::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

} // namespace chansel

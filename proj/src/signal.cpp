#include "chansel/signal.hpp"

#include "chansel/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace chansel {

MultichannelSignal::MultichannelSignal(std::size_t channels, std::size_t samples,
                                       std::vector<double> data, double sample_rate)
    : channels_(channels), samples_(samples), sample_rate_(sample_rate), data_(std::move(data)) {
  if (channels_ == 0 || samples_ == 0)
    throw DomainError("signal needs at least one channel and one sample");
  if (data_.size() != channels_ * samples_)
    throw DomainError("signal payload has " + std::to_string(data_.size()) +
                      " values, expected " + std::to_string(channels_ * samples_));
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
    throw DomainError("sample rate must be positive");
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); }))
    throw DomainError("signal contains non-finite samples");
}

namespace {
std::vector<double> flatten_rows(const std::vector<std::vector<double>> &rows) {
  if (rows.empty())
    throw DomainError("signal needs at least one channel");
  const std::size_t t = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * t);
  for (const auto &r : rows) {
    if (r.size() != t)
      throw DomainError("signal rows have different lengths");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return flat;
}
} // namespace

MultichannelSignal::MultichannelSignal(const std::vector<std::vector<double>> &rows,
                                       double sample_rate)
    : MultichannelSignal(rows.size(), rows.empty() ? 0 : rows.front().size(), flatten_rows(rows),
                         sample_rate) {}

std::size_t ChannelMask::retained_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(),
                                                [](std::uint8_t b) { return b != 0; }));
}

MultichannelSignal ChannelMask::apply(const MultichannelSignal &x) const {
  if (bits_.size() != x.channels())
    throw ShapeError("mask has " + std::to_string(bits_.size()) + " bits for a " +
                     std::to_string(x.channels()) + "-channel signal");
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    if (bits_[c] == 0)
      std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(c * x.samples()), x.samples(), 0.0);
  }
  return MultichannelSignal(x.channels(), x.samples(), std::move(out), x.sample_rate());
}

ChannelSubset::ChannelSubset(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  if (indices_.empty())
    throw DomainError("channel subset must not be empty");
  for (std::size_t i = 1; i < indices_.size(); ++i) {
    if (indices_[i] <= indices_[i - 1])
      throw DomainError("channel subset indices must be strictly increasing");
  }
}

ChannelSubset ChannelSubset::full(std::size_t channels) {
  std::vector<std::size_t> idx(channels);
  for (std::size_t c = 0; c < channels; ++c)
    idx[c] = c;
  return ChannelSubset(std::move(idx));
}

bool ChannelSubset::contains(std::size_t c) const {
  return std::binary_search(indices_.begin(), indices_.end(), c);
}

ChannelSubset ChannelSubset::without(std::size_t c) const {
  std::vector<std::size_t> idx;
  for (auto i : indices_)
    if (i != c)
      idx.push_back(i);
  if (idx.size() == indices_.size())
    throw DomainError("channel " + std::to_string(c + 1) + " is not in subset " + label());
  return ChannelSubset(std::move(idx));
}

std::string ChannelSubset::label() const {
  const bool single_digit = indices_.empty() || indices_.back() < 9;
  std::string out;
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (!single_digit && i > 0)
      out.push_back(',');
    out += std::to_string(indices_[i] + 1);
  }
  return out;
}

ChannelMask ChannelSubset::to_mask(std::size_t channels) const {
  if (!indices_.empty() && indices_.back() >= channels)
    throw DomainError("subset " + label() + " exceeds " + std::to_string(channels) + " channels");
  std::vector<std::uint8_t> bits(channels, 0);
  for (auto i : indices_)
    bits[i] = 1;
  return ChannelMask(std::move(bits));
}

ChannelMask draw_dropout_mask(std::size_t channels, double p, Rng &rng) {
  if (!(p >= 0.0 && p <= 1.0))
    throw DomainError("dropout probability must lie in [0, 1]");
  std::vector<std::uint8_t> bits(channels);
  const double keep = 1.0 - p;
  for (auto &b : bits)
    b = uniform01(rng) < keep ? 1 : 0;
  return ChannelMask(std::move(bits));
}

DropoutResult apply_channel_dropout(const MultichannelSignal &x, double p, Rng &rng) {
  ChannelMask mask = draw_dropout_mask(x.channels(), p, rng);
  MultichannelSignal out = mask.apply(x);
  return {std::move(out), std::move(mask)};
}

MultichannelSignal restrict_to_subset(const MultichannelSignal &x, const ChannelSubset &s) {
  if (s.empty())
    throw DomainError("cannot restrict to an empty subset");
  if (s.max_index() >= x.channels())
    throw DomainError("subset " + s.label() + " out of range for a " +
                      std::to_string(x.channels()) + "-channel signal");
  std::vector<double> out;
  out.reserve(s.size() * x.samples());
  for (auto c : s.indices()) {
    auto r = x.row(c);
    out.insert(out.end(), r.begin(), r.end());
  }
  return MultichannelSignal(s.size(), x.samples(), std::move(out), x.sample_rate());
}

ChannelSubset parse_subset(std::string_view label, std::size_t channels) {
  std::vector<std::size_t> one_based;
  auto parse_number = [&](std::string_view tok) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
      throw ParseError("invalid channel index '" + std::string(tok) + "' in '" +
                       std::string(label) + "'");
    one_based.push_back(v);
  };
  if (label.empty())
    throw ParseError("empty subset label");
  if (label.find(',') != std::string_view::npos) {
    std::size_t start = 0;
    while (start <= label.size()) {
      auto end = label.find(',', start);
      if (end == std::string_view::npos)
        end = label.size();
      auto tok = label.substr(start, end - start);
      while (!tok.empty() && tok.front() == ' ')
        tok.remove_prefix(1);
      while (!tok.empty() && tok.back() == ' ')
        tok.remove_suffix(1);
      parse_number(tok);
      start = end + 1;
    }
  } else {
    for (char ch : label)
      parse_number(std::string_view(&ch, 1));
  }
  std::vector<std::size_t> idx;
  for (auto v : one_based) {
    if (v == 0)
      throw ParseError("channel numbers are 1-based; got 0 in '" + std::string(label) + "'");
    if (v > channels)
      throw ParseError("channel " + std::to_string(v) + " exceeds channel count " +
                       std::to_string(channels));
    idx.push_back(v - 1);
  }
  std::sort(idx.begin(), idx.end());
  if (std::adjacent_find(idx.begin(), idx.end()) != idx.end())
    throw ParseError("duplicate channel in '" + std::string(label) + "'");
  return ChannelSubset(std::move(idx));
}

std::vector<ChannelSubset> enumerate_subsets(std::size_t channels, std::size_t k) {
  if (k == 0 || k > channels)
    throw DomainError("subset size must satisfy 1 <= k <= channels");
  std::vector<ChannelSubset> out;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i)
    idx[i] = i;
  while (true) {
    out.emplace_back(idx);
    // advance to the next combination in lexicographic order
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == channels - k + (i - 1))
      --i;
    if (i == 0)
      break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j)
      idx[j] = idx[j - 1] + 1;
  }
  return out;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n)
    return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i)
    r = r * (n - k + i) / i;
  return r;
}

} // namespace chansel

#pragma once

#include "chansel/random.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chansel {

/**
 * C x T real-valued recording stored row-major (one row per channel).
 *
 * Values are immutable after construction. Every row has the same length
 * T >= 1 and every sample is finite; constructors throw DomainError otherwise.
 */
class MultichannelSignal {
public:
  MultichannelSignal(std::size_t channels, std::size_t samples, std::vector<double> data,
                     double sample_rate = 1000.0);
  explicit MultichannelSignal(const std::vector<std::vector<double>> &rows,
                              double sample_rate = 1000.0);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t samples() const noexcept { return samples_; }
  double sample_rate() const noexcept { return sample_rate_; }

  std::span<const double> row(std::size_t c) const {
    return {data_.data() + c * samples_, samples_};
  }
  double at(std::size_t c, std::size_t t) const { return data_[c * samples_ + t]; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const MultichannelSignal &, const MultichannelSignal &) = default;

private:
  std::size_t channels_;
  std::size_t samples_;
  double sample_rate_;
  std::vector<double> data_;
};

/// Binary keep/drop flag per channel (1 = retained).
class ChannelMask {
public:
  ChannelMask() = default;
  explicit ChannelMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}
  static ChannelMask all(std::size_t channels) {
    return ChannelMask(std::vector<std::uint8_t>(channels, 1));
  }

  std::size_t size() const noexcept { return bits_.size(); }
  bool retained(std::size_t c) const { return bits_.at(c) != 0; }
  std::size_t retained_count() const noexcept;
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  /// Row c of the result equals row c of x when retained, exact zeros otherwise.
  MultichannelSignal apply(const MultichannelSignal &x) const;

  friend bool operator==(const ChannelMask &, const ChannelMask &) = default;

private:
  std::vector<std::uint8_t> bits_;
};

/**
 * Strictly increasing, non-empty list of 0-based channel indices.
 *
 * The canonical text label uses 1-based channel numbers: concatenated digits
 * ("1356") while every label is a single digit, comma-separated otherwise.
 */
class ChannelSubset {
public:
  ChannelSubset() = default;
  explicit ChannelSubset(std::vector<std::size_t> indices);
  static ChannelSubset full(std::size_t channels);

  std::span<const std::size_t> indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  bool contains(std::size_t c) const;
  std::size_t max_index() const { return indices_.back(); }

  ChannelSubset without(std::size_t c) const;
  std::string label() const;
  /// Mask over `channels` channels with ones exactly at the subset's indices.
  ChannelMask to_mask(std::size_t channels) const;

  friend bool operator==(const ChannelSubset &, const ChannelSubset &) = default;
  friend auto operator<=>(const ChannelSubset &, const ChannelSubset &) = default;

private:
  std::vector<std::size_t> indices_;
};

struct DropoutResult {
  MultichannelSignal signal;
  ChannelMask mask;
};

/// Draws a mask with each bit ~ Bernoulli(1 - p), independently per channel.
ChannelMask draw_dropout_mask(std::size_t channels, double p, Rng &rng);

/// Plain channel masking: no rescaling of retained rows. Throws DomainError for p outside [0, 1].
DropoutResult apply_channel_dropout(const MultichannelSignal &x, double p, Rng &rng);

MultichannelSignal restrict_to_subset(const MultichannelSignal &x, const ChannelSubset &s);

/// Accepts "1356" or "1,3,5,6" (1-based). Throws ParseError on duplicates, 0, or index > channels.
ChannelSubset parse_subset(std::string_view label, std::size_t channels);

/// All k-element subsets of {0..channels-1} in lexicographic order.
std::vector<ChannelSubset> enumerate_subsets(std::size_t channels, std::size_t k);

std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

// File formats: a JSON header (channels, samples_per_channel, sample_rate,
// payload) next to a little-endian float64 row-major payload file.
void write_signal(const MultichannelSignal &x, const std::filesystem::path &header_path);
MultichannelSignal read_signal(const std::filesystem::path &header_path);

/// One column per channel; an optional non-numeric header row is skipped.
MultichannelSignal read_signal_csv(const std::filesystem::path &path, double sample_rate = 1000.0);
void write_signal_csv(const MultichannelSignal &x, const std::filesystem::path &path);

} // namespace chansel

#pragma once

// Dataset ingestion: IDX (MNIST, pre-converted SVHN) and CIFAR-10 binary
// batches, plus seeded batch sampling.
//
// Pixels are kept as bytes; their normalized value is byte/256, so every
// input lies in [0, 1) and never reaches 1.0.

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "fxtrain/netgraph.hpp"

namespace fxtrain::data {

enum class Split { train, test };

class Dataset {
 public:
  Dataset() = default;
  /// Images are channel-planar: [count][depth][rows][cols].
  Dataset(net::Shape image_shape, std::vector<std::uint8_t> pixels, std::vector<std::uint8_t> labels,
          int class_count, Split split);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  const net::Shape& image_shape() const noexcept { return shape_; }
  int class_count() const noexcept { return class_count_; }
  Split split() const noexcept { return split_; }

  std::span<const std::uint8_t> image(std::size_t i) const noexcept {
    return {pixels_.data() + i * shape_.size(), shape_.size()};
  }
  int label(std::size_t i) const noexcept { return labels_[i]; }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

  static double normalize(std::uint8_t byte) noexcept { return byte / 256.0; }
  /// Normalized copy of image i.
  std::vector<double> image_values(std::size_t i) const;

  /// First n items (or all, if n >= size()).
  Dataset head(std::size_t n) const;

 private:
  net::Shape shape_;
  std::vector<std::uint8_t> pixels_;
  std::vector<std::uint8_t> labels_;
  int class_count_ = 10;
  Split split_ = Split::train;
};

inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
/// 4-D unsigned-byte IDX: [count][depth][rows][cols], used for colour images.
inline constexpr std::uint32_t kIdxColorImageMagic = 0x00000804;

/// Throws io (missing file), bad_magic, truncated or count_mismatch.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 Split split = Split::train, int class_count = 10);

/// Writes `dataset` as an IDX image/label pair (3-D when depth == 1, else 4-D).
void write_idx(const Dataset& dataset, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

inline constexpr std::size_t kCifarRecordBytes = 3073;

/// Concatenates CIFAR-10 binary batches (1 label byte + 3072 planar RGB bytes
/// per record). Throws io or truncated.
Dataset load_cifar10(std::span<const std::filesystem::path> batch_paths, Split split = Split::train);
void write_cifar10(const Dataset& dataset, const std::filesystem::path& path);

/// Standard file names inside a data directory for a dataset family.
struct DataFiles {
  std::vector<std::filesystem::path> train;  // images, labels (IDX) or batches (CIFAR)
  std::vector<std::filesystem::path> test;
};
DataFiles standard_files(net::Dataset kind, const std::filesystem::path& dir);
Dataset load_standard(net::Dataset kind, const std::filesystem::path& dir, Split split);

/// Uniform sample of `batch_size` distinct indices from [0, dataset_size) by a
/// partial Fisher-Yates shuffle driven by SplitMix64. Returns the indices and
/// the advanced RNG state. Throws invalid_argument if batch_size > dataset_size
/// or batch_size == 0.
std::pair<std::vector<std::size_t>, std::uint64_t> sample_batch(std::size_t dataset_size, std::size_t batch_size,
                                                                std::uint64_t rng_state);

}  // namespace fxtrain::data

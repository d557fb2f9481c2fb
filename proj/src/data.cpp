#include "fxtrain/data.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>

#include "fxtrain/random.hpp"

namespace fxtrain::data {

namespace fs = std::filesystem;

Dataset::Dataset(net::Shape image_shape, std::vector<std::uint8_t> pixels, std::vector<std::uint8_t> labels,
                 int class_count, Split split)
    : shape_(image_shape),
      pixels_(std::move(pixels)),
      labels_(std::move(labels)),
      class_count_(class_count),
      split_(split) {
  if (pixels_.size() != labels_.size() * shape_.size()) {
    throw Error(Errc::count_mismatch, "dataset holds " + std::to_string(pixels_.size()) + " pixel bytes for " +
                                          std::to_string(labels_.size()) + " labels of " + shape_.to_string());
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= class_count_) {
      throw Error(Errc::invalid_argument, "label " + std::to_string(labels_[i]) + " at index " + std::to_string(i) +
                                              " is outside [0, " + std::to_string(class_count_) + ")");
    }
  }
}

std::vector<double> Dataset::image_values(std::size_t i) const {
  const auto img = image(i);
  std::vector<double> out(img.size());
  std::transform(img.begin(), img.end(), out.begin(), normalize);
  return out;
}

Dataset Dataset::head(std::size_t n) const {
  n = std::min(n, size());
  std::vector<std::uint8_t> pixels(pixels_.begin(), pixels_.begin() + static_cast<std::ptrdiff_t>(n * shape_.size()));
  std::vector<std::uint8_t> labels(labels_.begin(), labels_.begin() + static_cast<std::ptrdiff_t>(n));
  return Dataset(shape_, std::move(pixels), std::move(labels), class_count_, split_);
}

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const fs::path& path) {
  if (offset + 4 > bytes.size()) throw Error(Errc::truncated, path.string() + ": header is truncated");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

std::string hex(std::uint32_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s.push_back(digits[(v >> shift) & 0xF]);
  return s;
}

}  // namespace

Dataset load_idx(const fs::path& images_path, const fs::path& labels_path, Split split, int class_count) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  const std::uint32_t img_magic = read_be32(img, 0, images_path);
  if (img_magic != kIdxImageMagic && img_magic != kIdxColorImageMagic) {
    throw Error(Errc::bad_magic, images_path.string() + ": bad image magic " + hex(img_magic) + ", expected " +
                                     hex(kIdxImageMagic) + " or " + hex(kIdxColorImageMagic));
  }
  const std::uint32_t lab_magic = read_be32(lab, 0, labels_path);
  if (lab_magic != kIdxLabelMagic) {
    throw Error(Errc::bad_magic,
                labels_path.string() + ": bad label magic " + hex(lab_magic) + ", expected " + hex(kIdxLabelMagic));
  }

  const bool color = img_magic == kIdxColorImageMagic;
  const std::size_t count = read_be32(img, 4, images_path);
  net::Shape shape;
  std::size_t offset = 0;
  if (color) {
    shape = {static_cast<int>(read_be32(img, 8, images_path)), static_cast<int>(read_be32(img, 12, images_path)),
             static_cast<int>(read_be32(img, 16, images_path))};
    offset = 20;
  } else {
    shape = {1, static_cast<int>(read_be32(img, 8, images_path)), static_cast<int>(read_be32(img, 12, images_path))};
    offset = 16;
  }
  const std::size_t label_count = read_be32(lab, 4, labels_path);

  const std::size_t need = offset + count * shape.size();
  if (img.size() < need) {
    throw Error(Errc::truncated, images_path.string() + ": expected " + std::to_string(need) + " bytes for " +
                                     std::to_string(count) + " images, file has " + std::to_string(img.size()));
  }
  if (lab.size() < 8 + label_count) {
    throw Error(Errc::truncated, labels_path.string() + ": expected " + std::to_string(8 + label_count) +
                                     " bytes, file has " + std::to_string(lab.size()));
  }
  if (count != label_count) {
    throw Error(Errc::count_mismatch, images_path.string() + " holds " + std::to_string(count) + " images but " +
                                          labels_path.string() + " holds " + std::to_string(label_count) + " labels");
  }

  std::vector<std::uint8_t> pixels(img.begin() + static_cast<std::ptrdiff_t>(offset),
                                   img.begin() + static_cast<std::ptrdiff_t>(need));
  std::vector<std::uint8_t> labels(lab.begin() + 8, lab.begin() + 8 + static_cast<std::ptrdiff_t>(label_count));
  return Dataset(shape, std::move(pixels), std::move(labels), class_count, split);
}

void write_idx(const Dataset& dataset, const fs::path& images_path, const fs::path& labels_path) {
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw Error(Errc::io, "cannot write " + images_path.string() + " / " + labels_path.string());
  const auto& s = dataset.image_shape();
  const auto count = static_cast<std::uint32_t>(dataset.size());
  if (s.depth == 1) {
    put_be32(img, kIdxImageMagic);
    put_be32(img, count);
  } else {
    put_be32(img, kIdxColorImageMagic);
    put_be32(img, count);
    put_be32(img, static_cast<std::uint32_t>(s.depth));
  }
  put_be32(img, static_cast<std::uint32_t>(s.rows));
  put_be32(img, static_cast<std::uint32_t>(s.cols));
  const auto px = dataset.pixels();
  img.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));

  put_be32(lab, kIdxLabelMagic);
  put_be32(lab, count);
  const auto lb = dataset.labels();
  lab.write(reinterpret_cast<const char*>(lb.data()), static_cast<std::streamsize>(lb.size()));
}

Dataset load_cifar10(std::span<const fs::path> batch_paths, Split split) {
  const net::Shape shape{3, 32, 32};
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> labels;
  for (const auto& path : batch_paths) {
    const auto bytes = read_file(path);
    if (bytes.size() % kCifarRecordBytes != 0) {
      throw Error(Errc::truncated, path.string() + ": size " + std::to_string(bytes.size()) +
                                       " is not a multiple of the 3073-byte record");
    }
    for (std::size_t off = 0; off < bytes.size(); off += kCifarRecordBytes) {
      labels.push_back(bytes[off]);
      pixels.insert(pixels.end(), bytes.begin() + static_cast<std::ptrdiff_t>(off + 1),
                    bytes.begin() + static_cast<std::ptrdiff_t>(off + kCifarRecordBytes));
    }
  }
  return Dataset(shape, std::move(pixels), std::move(labels), 10, split);
}

void write_cifar10(const Dataset& dataset, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out.put(static_cast<char>(dataset.label(i)));
    const auto img = dataset.image(i);
    out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
  }
}

DataFiles standard_files(net::Dataset kind, const fs::path& dir) {
  if (kind == net::Dataset::cifar10) {
    DataFiles f;
    for (int b = 1; b <= 5; ++b) f.train.push_back(dir / ("data_batch_" + std::to_string(b) + ".bin"));
    f.test.push_back(dir / "test_batch.bin");
    return f;
  }
  return {{dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte"},
          {dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"}};
}

Dataset load_standard(net::Dataset kind, const fs::path& dir, Split split) {
  const auto files = standard_files(kind, dir);
  const auto& paths = split == Split::train ? files.train : files.test;
  if (kind == net::Dataset::cifar10) return load_cifar10(paths, split);
  return load_idx(paths[0], paths[1], split);
}

std::pair<std::vector<std::size_t>, std::uint64_t> sample_batch(std::size_t dataset_size, std::size_t batch_size,
                                                                std::uint64_t rng_state) {
  if (batch_size == 0 || batch_size > dataset_size) {
    throw Error(Errc::invalid_argument, "batch size " + std::to_string(batch_size) + " is not in [1, " +
                                            std::to_string(dataset_size) + "]");
  }
  SplitMix64 rng(rng_state);
  std::vector<std::size_t> pool(dataset_size);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(dataset_size - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(batch_size);
  return {std::move(pool), rng.state()};
}

}  // namespace fxtrain::data

#include <cctype>
#include <string>

#include "fmparts/error.hpp"
#include "fmparts/tensorio.hpp"

namespace fmparts {

namespace {

class PnmHeaderParser {
 public:
  explicit PnmHeaderParser(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  int next_int() {
    skip_whitespace_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw Error(ErrorCode::CorruptHeader, "expected an integer at offset " + std::to_string(pos_));
    }
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > (1L << 24)) throw Error(ErrorCode::CorruptHeader, "header value too large");
    }
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(ErrorCode::CorruptHeader, "missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_whitespace_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

ImageGrid decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(ErrorCode::UnsupportedFormat, "only binary PGM (P5) and PPM (P6) are supported");
  }
  ImageGrid image;
  image.channels = bytes[1] == '5' ? 1 : 3;
  PnmHeaderParser header(bytes);
  image.width = header.next_int();
  image.height = header.next_int();
  const int maxval = header.next_int();
  if (image.width <= 0 || image.height <= 0) throw Error(ErrorCode::CorruptHeader, "zero dimension");
  if (maxval <= 0) throw Error(ErrorCode::CorruptHeader, "maxval must be positive");
  if (maxval > 255) throw Error(ErrorCode::UnsupportedFormat, "16-bit samples are not supported");

  const std::size_t offset = header.raster_offset();
  const std::size_t count = static_cast<std::size_t>(image.width) * image.height * image.channels;
  if (bytes.size() - offset < count) {
    throw Error(ErrorCode::CorruptHeader, "raster shorter than header dimensions");
  }
  image.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                      bytes.begin() + static_cast<std::ptrdiff_t>(offset + count));
  if (maxval != 255) {
    for (auto& v : image.pixels) {
      v = static_cast<std::uint8_t>(std::min(255, (v * 255 + maxval / 2) / maxval));
    }
  }
  return image;
}

ImageGrid read_image(const std::filesystem::path& path) { return decode_image(read_file_bytes(path)); }

std::vector<std::uint8_t> encode_image(const ImageGrid& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorCode::UnsupportedFormat, "images must have 1 or 3 channels");
  }
  const std::string header = std::string(image.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(image.width) + " " + std::to_string(image.height) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

void write_image(const ImageGrid& image, const std::filesystem::path& path) {
  write_file_bytes(path, encode_image(image));
}

}  // namespace fmparts

#include "splat/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace splat {

void save_image(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_image: cannot open " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(size_t(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    const double* src = img.pixel(0, y);
    for (size_t i = 0; i < row.size(); ++i) {
      const double v = std::clamp(src[i], 0.0, 1.0);
      row[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
  }
  if (!out) throw std::runtime_error("save_image: write failed for " + path);
}

namespace {

int read_ppm_token(std::istream& in) {
  // Skips whitespace and '#' comments, per the PPM header grammar.
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  return value;
}

}  // namespace

Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_image: cannot open " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '6') {
    throw std::runtime_error("load_image: " + path + " is not a P6 PPM");
  }
  const int w = read_ppm_token(in);
  const int h = read_ppm_token(in);
  const int maxval = read_ppm_token(in);
  if (w <= 0 || h <= 0 || maxval != 255 || !in) {
    throw std::runtime_error("load_image: corrupt header in " + path);
  }
  in.get();  // single whitespace after maxval

  Image img(w, h);
  std::vector<unsigned char> raw(size_t(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (in.gcount() != std::streamsize(raw.size())) {
    throw std::runtime_error("load_image: truncated pixel data in " + path);
  }
  for (size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
  return img;
}

}  // namespace splat

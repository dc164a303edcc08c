#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace shortmr::plot {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kGray{170, 170, 170};
inline constexpr Rgb kLightGray{225, 225, 225};
inline constexpr Rgb kBlue{46, 104, 184};
inline constexpr Rgb kRed{200, 63, 54};
inline constexpr Rgb kGreen{58, 144, 88};
inline constexpr Rgb kOrange{224, 138, 42};

// RGB raster with a built-in 5x7 bitmap font, written out as an 8-bit PNG.
class Canvas {
 public:
  Canvas(int width, int height, Rgb background = kWhite);

  int width() const { return width_; }
  int height() const { return height_; }

  void set(int x, int y, Rgb c);
  void fill_rect(int x, int y, int w, int h, Rgb c);
  void rect(int x, int y, int w, int h, Rgb c);
  void line(int x0, int y0, int x1, int y1, Rgb c);
  void text(int x, int y, const std::string& s, Rgb c, int scale = 1);
  static int text_width(const std::string& s, int scale = 1);
  static int text_height(int scale = 1);

  void save_png(const std::filesystem::path& path) const;

 private:
  int width_, height_;
  std::vector<std::uint8_t> pixels_;  // RGB, row-major
};

}  // namespace shortmr::plot

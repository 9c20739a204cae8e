#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "drsam/raster.hpp"

namespace drsam {

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
};

/// Decodes a PNG. Multi-channel input is reduced to gray by the rounded channel mean.
GrayscaleImage decode_png_gray(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png_gray(const GrayscaleImage& img);
std::vector<std::uint8_t> encode_png_rgb(const RgbImage& img);

GrayscaleImage read_gray(const std::filesystem::path& path);
void write_gray(const std::filesystem::path& path, const GrayscaleImage& img);
void write_rgb(const std::filesystem::path& path, const RgbImage& img);

/// Masks are stored as 0/255 gray; values >= 128 load as foreground.
BinaryMask gray_to_mask(const GrayscaleImage& img);
GrayscaleImage mask_to_gray(const BinaryMask& mask);
BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Hex BLAKE2b-128 digest of the dimensions and pixel data; used as a content-addressed image id.
std::string image_digest(const GrayscaleImage& img);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace drsam

#include "drsam/image_io.hpp"

#include <fstream>
#include <iterator>

#include <png.h>
#include <sodium.h>

namespace drsam {
namespace {

void ensure_sodium() {
    static const bool ok = sodium_init() >= 0;
    if (!ok) throw Error("libsodium initialization failed");
}

std::vector<std::uint8_t> encode_png(const std::uint8_t* pixels, int width, int height,
                                     png_uint_32 format) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr)) {
        throw Error(std::string("png encode failed: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
        throw Error(std::string("png encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

}  // namespace

GrayscaleImage decode_png_gray(std::span<const std::uint8_t> bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw ValidationError(std::string("not a readable PNG: ") + image.message);
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int width = static_cast<int>(image.width);
    const int height = static_cast<int>(image.height);
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw ValidationError(std::string("PNG decode failed: ") + image.message);
    }
    if (!color) return GrayscaleImage(width, height, std::move(buffer));

    std::vector<std::uint8_t> gray(static_cast<std::size_t>(width) * height);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const unsigned sum = buffer[3 * i] + buffer[3 * i + 1] + buffer[3 * i + 2];
        gray[i] = static_cast<std::uint8_t>((sum + 1) / 3);
    }
    return GrayscaleImage(width, height, std::move(gray));
}

std::vector<std::uint8_t> encode_png_gray(const GrayscaleImage& img) {
    return encode_png(img.data().data(), img.width(), img.height(), PNG_FORMAT_GRAY);
}

std::vector<std::uint8_t> encode_png_rgb(const RgbImage& img) {
    if (img.rgb.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
        throw ValidationError("rgb buffer size mismatch");
    }
    return encode_png(img.rgb.data(), img.width, img.height, PNG_FORMAT_RGB);
}

GrayscaleImage read_gray(const std::filesystem::path& path) {
    return decode_png_gray(read_file_bytes(path));
}

void write_gray(const std::filesystem::path& path, const GrayscaleImage& img) {
    write_file_bytes(path, encode_png_gray(img));
}

void write_rgb(const std::filesystem::path& path, const RgbImage& img) {
    write_file_bytes(path, encode_png_rgb(img));
}

BinaryMask gray_to_mask(const GrayscaleImage& img) {
    BinaryMask out(img.width(), img.height());
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= 128 ? 1 : 0;
    return out;
}

GrayscaleImage mask_to_gray(const BinaryMask& mask) {
    GrayscaleImage out(mask.width(), mask.height());
    auto src = mask.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 255 : 0;
    return out;
}

BinaryMask read_mask(const std::filesystem::path& path) { return gray_to_mask(read_gray(path)); }

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
    write_gray(path, mask_to_gray(mask));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    ensure_sodium();
    const auto variant = sodium_base64_VARIANT_ORIGINAL;
    std::string out(sodium_base64_ENCODED_LEN(bytes.size(), variant), '\0');
    sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), variant);
    out.resize(out.size() - 1);  // drop the terminating NUL
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    ensure_sodium();
    std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
    std::size_t len = 0;
    if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), " \r\n", &len,
                          nullptr, sodium_base64_VARIANT_ORIGINAL) != 0) {
        throw ValidationError("invalid base64 payload");
    }
    out.resize(len);
    return out;
}

std::string image_digest(const GrayscaleImage& img) {
    ensure_sodium();
    unsigned char hash[16];
    crypto_generichash_state state;
    crypto_generichash_init(&state, nullptr, 0, sizeof hash);
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(img.width()),
                                   static_cast<std::uint32_t>(img.height())};
    crypto_generichash_update(&state, reinterpret_cast<const unsigned char*>(dims), sizeof dims);
    crypto_generichash_update(&state, img.data().data(), img.data().size());
    crypto_generichash_final(&state, hash, sizeof hash);

    char hex[2 * sizeof hash + 1];
    sodium_bin2hex(hex, sizeof hex, hash, sizeof hash);
    return hex;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace drsam

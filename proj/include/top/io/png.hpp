#pragma once

// 8-bit RGB PNG read/write on top of libpng's simplified API.
// Bytes map to intensities as v = byte / 255 and back as round(v * 255).

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "top/error.hpp"
#include "top/image.hpp"

namespace top::io {

inline ImageTensor read_png(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw ImageIoError("cannot read PNG " + path.string() + ": " + msg);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw ImageIoError("cannot decode PNG " + path.string() + ": " + msg);
    }
    if (image.width == 0 || image.height == 0) throw ImageIoError("PNG " + path.string() + " has no pixels");
    std::vector<double> values(buffer.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) values[i] = static_cast<double>(buffer[i]) / 255.0;
    return ImageTensor(image.height, image.width, std::move(values));
}

inline std::vector<std::uint8_t> to_bytes(const ImageTensor& img) {
    std::vector<std::uint8_t> out(img.size());
    const auto data = img.data();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(data[i], 0.0, 1.0) * 255.0));
    return out;
}

inline void write_png(const std::filesystem::path& path, const ImageTensor& img) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_RGB;
    const auto bytes = to_bytes(img);
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw ImageIoError("cannot write PNG " + path.string() + ": " + msg);
    }
}

} // namespace top::io

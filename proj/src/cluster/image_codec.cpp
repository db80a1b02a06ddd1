// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/cluster/image_codec.hpp"

#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <jpeglib.h>
#include <png.h>

namespace cpt {

std::vector<std::uint8_t> encode_png(const Image8 &image)
{
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = image.width;
  img.height = image.height;
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.rgb.data(), 0, nullptr))
    throw CodecError(std::string("png encode: ") + img.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.rgb.data(), 0, nullptr))
    throw CodecError(std::string("png encode: ") + img.message);
  out.resize(size);
  return out;
}

Image8 decode_png(std::span<const std::uint8_t> bytes)
{
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw CodecError(std::string("png decode: ") + img.message);
  img.format = PNG_FORMAT_RGB;
  Image8 out;
  out.width = img.width;
  out.height = img.height;
  out.rgb.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.rgb.data(), 0, nullptr)) {
    png_image_free(&img);
    throw CodecError(std::string("png decode: ") + img.message);
  }
  return out;
}

namespace {

struct JpegError
{
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo)
{
  auto *err = reinterpret_cast<JpegError *>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

} // namespace

std::vector<std::uint8_t> encode_jpeg(const Image8 &image, int quality)
{
  if (image.width == 0 || image.height == 0)
    throw CodecError("jpeg encode: empty image");
  jpeg_compress_struct cinfo{};
  JpegError err{};
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  unsigned char *mem = nullptr;
  unsigned long mem_size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(mem);
    throw CodecError(std::string("jpeg encode: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &mem, &mem_size);
  cinfo.image_width = image.width;
  cinfo.image_height = image.height;
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, std::clamp(quality, 1, 100), TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(image.rgb.data() + std::size_t(cinfo.next_scanline) * image.width * 3);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> out(mem, mem + mem_size);
  jpeg_destroy_compress(&cinfo);
  std::free(mem);
  return out;
}

Image8 decode_jpeg(std::span<const std::uint8_t> bytes)
{
  jpeg_decompress_struct cinfo{};
  JpegError err{};
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  Image8 out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw CodecError(std::string("jpeg decode: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = cinfo.output_width;
  out.height = cinfo.output_height;
  out.rgb.resize(std::size_t(out.width) * out.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.rgb.data() + std::size_t(cinfo.output_scanline) * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

std::vector<std::uint8_t> encode_radiance_dump(const RadianceBuffer &buffer)
{
  std::vector<std::uint8_t> out;
  out.reserve(buffer.byte_size() + 4);
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
      out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  for (float f : buffer.rgb)
    put32(std::bit_cast<std::uint32_t>(f));
  put32(buffer.spp);
  return out;
}

RadianceBuffer decode_radiance_dump(
    std::span<const std::uint8_t> bytes, std::uint32_t width, std::uint32_t height)
{
  const std::size_t floats = std::size_t(width) * height * 3;
  if (bytes.size() != floats * 4 + 4)
    throw CodecError("radiance dump has " + std::to_string(bytes.size()) + " bytes, expected "
        + std::to_string(floats * 4 + 4));
  auto get32 = [&](std::size_t at) {
    return std::uint32_t(bytes[at]) | (std::uint32_t(bytes[at + 1]) << 8)
        | (std::uint32_t(bytes[at + 2]) << 16) | (std::uint32_t(bytes[at + 3]) << 24);
  };
  RadianceBuffer b(width, height, get32(floats * 4));
  for (std::size_t i = 0; i < floats; ++i)
    b.rgb[i] = std::bit_cast<float>(get32(i * 4));
  return b;
}

void write_pfm(const std::filesystem::path &path, const RadianceBuffer &buffer)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw CodecError("cannot write " + path.string());
  out << "PF\n" << buffer.width << ' ' << buffer.height << "\n-1.0\n";
  const float inv = buffer.spp ? 1.f / float(buffer.spp) : 0.f;
  std::vector<float> row(std::size_t(buffer.width) * 3);
  // PFM rows run bottom to top.
  for (std::uint32_t y = buffer.height; y-- > 0;) {
    for (std::size_t i = 0; i < row.size(); ++i)
      row[i] = buffer.rgb[buffer.index(0, y) + i] * inv;
    out.write(reinterpret_cast<const char *>(row.data()), std::streamsize(row.size() * 4));
  }
  if (!out)
    throw CodecError("short write to " + path.string());
}

RadianceBuffer read_pfm(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw CodecError("cannot read " + path.string());
  std::string magic;
  std::uint32_t w = 0, h = 0;
  float scale = 0;
  in >> magic >> w >> h >> scale;
  in.get();
  if (magic != "PF" || w == 0 || h == 0 || scale >= 0)
    throw CodecError(path.string() + " is not a little-endian RGB PFM");
  RadianceBuffer b(w, h, 1);
  for (std::uint32_t y = h; y-- > 0;)
    in.read(reinterpret_cast<char *>(b.rgb.data() + b.index(0, y)), std::streamsize(w) * 12);
  if (!in)
    throw CodecError(path.string() + " is truncated");
  return b;
}

double rmse(const RadianceBuffer &image, const RadianceBuffer &reference)
{
  if (image.extent() != reference.extent())
    throw StructuralError("rmse: image is " + std::to_string(image.width) + "x"
        + std::to_string(image.height) + " but the reference is "
        + std::to_string(reference.width) + "x" + std::to_string(reference.height));
  if (image.rgb.empty())
    return 0.0;
  const double a = 1.0 / image.spp, b = 1.0 / reference.spp;
  double sum = 0;
  for (std::size_t i = 0; i < image.rgb.size(); ++i) {
    const double d = image.rgb[i] * a - reference.rgb[i] * b;
    sum += d * d;
  }
  return std::sqrt(sum / double(image.rgb.size()));
}

} // namespace cpt

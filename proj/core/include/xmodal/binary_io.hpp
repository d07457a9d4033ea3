// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0
//
// Little-endian byte buffers for the checkpoint and embedding formats.

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "xmodal/errors.hpp"

namespace xmodal {

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_raw(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    bytes_.insert(bytes_.end(), c, c + n);
  }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    put_raw(s.data(), s.size());
  }
  void put_doubles(std::span<const double> v) { put_raw(v.data(), v.size() * sizeof(double)); }

  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

// Every read checks the remaining length and throws FormatError carrying the
// byte offset where the read started.
class ByteReader {
 public:
  explicit ByteReader(std::span<const char> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    static_assert(std::is_trivially_copyable_v<T>);
    T v;
    std::memcpy(&v, take(sizeof(T), what), sizeof(T));
    return v;
  }
  std::string get_string(const char* what, std::size_t max_len = 1u << 26) {
    const std::size_t at = offset_;
    const auto n = get<std::uint64_t>(what);
    if (n > max_len || n > remaining()) throw FormatError(std::string("implausible length for ") + what, at);
    const char* p = take(n, what);
    return std::string(p, n);
  }
  std::vector<double> get_doubles(std::size_t n, const char* what) {
    if (n > remaining() / sizeof(double)) throw FormatError(std::string("truncated ") + what, offset_);
    std::vector<double> v(n);
    std::memcpy(v.data(), take(n * sizeof(double), what), n * sizeof(double));
    return v;
  }
  const char* take(std::size_t n, const char* what) {
    if (n > remaining()) throw FormatError(std::string("truncated ") + what, offset_);
    const char* p = bytes_.data() + offset_;
    offset_ += n;
    return p;
  }

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }

 private:
  std::span<const char> bytes_;
  std::size_t offset_ = 0;
};

std::uint64_t fnv1a(std::span<const char> bytes);
std::vector<char> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, std::span<const char> bytes);

}  // namespace xmodal

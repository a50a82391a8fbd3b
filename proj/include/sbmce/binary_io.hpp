// SPDX-License-Identifier: Apache-2.0
//
// sbmce: score-based MIMO channel estimation
// Copyright (C) 2026 sbmce contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Little-endian primitives for the versioned binary containers (datasets,
// GMM priors, model checkpoints).

#pragma once

#include "error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>

namespace sbmce::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T byteswap_if_needed(T v)
{
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1)
    {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
            std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

class Writer
{
  public:
    explicit Writer(const std::string &path) : path_(path), out_(path, std::ios::binary | std::ios::trunc)
    {
        require(static_cast<bool>(out_), ErrorKind::Io, "cannot open '" + path + "' for writing");
    }

    void bytes(const void *data, std::size_t n)
    {
        out_.write(static_cast<const char *>(data), static_cast<std::streamsize>(n));
        require(static_cast<bool>(out_), ErrorKind::Io, "write to '" + path_ + "' failed");
    }

    void magic(std::string_view m) { bytes(m.data(), m.size()); }

    template <typename T>
        requires std::is_arithmetic_v<T>
    void value(T v)
    {
        v = byteswap_if_needed(v);
        bytes(&v, sizeof(T));
    }

    void doubles(const double *data, std::size_t n)
    {
        if constexpr (std::endian::native == std::endian::little)
            bytes(data, n * sizeof(double));
        else
            for (std::size_t i = 0; i < n; ++i)
                value(data[i]);
    }

    void string(const std::string &s)
    {
        value(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

    void close()
    {
        out_.flush();
        require(static_cast<bool>(out_), ErrorKind::Io, "flush of '" + path_ + "' failed");
        out_.close();
    }

  private:
    std::string path_;
    std::ofstream out_;
};

class Reader
{
  public:
    explicit Reader(const std::string &path) : path_(path), in_(path, std::ios::binary)
    {
        require(static_cast<bool>(in_), ErrorKind::Io, "cannot open '" + path + "' for reading");
    }

    const std::string &path() const noexcept { return path_; }

    void bytes(void *data, std::size_t n)
    {
        in_.read(static_cast<char *>(data), static_cast<std::streamsize>(n));
        require(static_cast<std::size_t>(in_.gcount()) == n, ErrorKind::Format,
                "'" + path_ + "' is truncated");
    }

    void expect_magic(std::string_view m)
    {
        std::string got(m.size(), '\0');
        bytes(got.data(), got.size());
        require(got == m, ErrorKind::Format, "'" + path_ + "' has wrong magic (expected " + std::string(m) + ")");
    }

    void expect_version(std::uint16_t expected)
    {
        const auto v = value<std::uint16_t>();
        require(v == expected, ErrorKind::Format,
                "'" + path_ + "' has unsupported version " + std::to_string(v) + " (expected " +
                    std::to_string(expected) + ")");
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    T value()
    {
        T v;
        bytes(&v, sizeof(T));
        return byteswap_if_needed(v);
    }

    void doubles(double *data, std::size_t n)
    {
        if constexpr (std::endian::native == std::endian::little)
            bytes(data, n * sizeof(double));
        else
            for (std::size_t i = 0; i < n; ++i)
                data[i] = value<double>();
    }

    std::string string()
    {
        const auto n = value<std::uint32_t>();
        require(n < (1u << 20), ErrorKind::Format, "'" + path_ + "' has an implausible string length");
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }

    void expect_end()
    {
        char c;
        in_.read(&c, 1);
        require(in_.gcount() == 0, ErrorKind::Format, "'" + path_ + "' has trailing bytes");
    }

  private:
    std::string path_;
    std::ifstream in_;
};

} // namespace sbmce::io

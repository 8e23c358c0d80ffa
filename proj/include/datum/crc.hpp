/*
 * Copyright (c) 2026, The datum-guard Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DATUM_CRC_HPP
#define DATUM_CRC_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace datum {

/**
 * CRC-16/MCRF4XX as used by MAVLink ("X.25" in its sources): reflected
 * polynomial 0x8408, seed 0xFFFF, no final XOR. Accumulates incrementally.
 */
class Crc16X25 {
public:
    constexpr Crc16X25() = default;
    constexpr explicit Crc16X25(std::uint16_t seed) : value_(seed) {}

    constexpr void add(std::uint8_t byte) noexcept
    {
        std::uint8_t tmp = byte ^ static_cast<std::uint8_t>(value_ & 0xFF);
        tmp ^= static_cast<std::uint8_t>(tmp << 4);
        value_ = static_cast<std::uint16_t>((value_ >> 8) ^ (tmp << 8) ^ (tmp << 3) ^ (tmp >> 4));
    }

    constexpr void add(std::span<const std::uint8_t> bytes) noexcept
    {
        for (auto b : bytes) {
            add(b);
        }
    }

    constexpr void add(std::string_view text) noexcept
    {
        for (char c : text) {
            add(static_cast<std::uint8_t>(c));
        }
    }

    [[nodiscard]] constexpr std::uint16_t get() const noexcept { return value_; }

private:
    std::uint16_t value_ = 0xFFFF;
};

inline constexpr std::uint16_t crc16_x25(std::span<const std::uint8_t> bytes, std::uint16_t seed = 0xFFFF) noexcept
{
    Crc16X25 crc(seed);
    crc.add(bytes);
    return crc.get();
}

inline constexpr std::uint16_t crc16_x25(std::string_view text, std::uint16_t seed = 0xFFFF) noexcept
{
    Crc16X25 crc(seed);
    crc.add(text);
    return crc.get();
}

static_assert(crc16_x25(std::string_view("123456789")) == 0x6F91);

} // namespace datum

#endif // DATUM_CRC_HPP

#pragma once

#include <cstdint>
#include <span>

namespace xrprobe {

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
std::uint16_t crc16(std::span<const std::uint8_t> bytes);

}  // namespace xrprobe

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace renal {

// Standard base64 (RFC 4648, with padding). Used by the external classifier
// protocol to ship PNG-encoded patches over a line-oriented stream.

std::string base64_encode(const std::vector<std::uint8_t>& data);

// Throws format_error on characters outside the alphabet or bad padding.
std::vector<std::uint8_t> base64_decode(const std::string& text);

} // namespace renal

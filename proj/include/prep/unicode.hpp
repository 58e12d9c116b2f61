#pragma once

#include <string>
#include <string_view>

namespace prep {

// UTF-8 <-> code points. Malformed bytes decode to U+FFFD one byte at a time.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);
std::string utf8_encode(char32_t c);

} // namespace prep

// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tvmerge {

/// Decodes UTF-8 into Unicode scalar values. Throws InvalidUtf8 on malformed
/// input, overlong forms, surrogates and code points above U+10FFFF.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

/// White_Space property of the Unicode character database.
bool is_unicode_space(char32_t c) noexcept;

/// Splits on runs of Unicode whitespace; leading/trailing whitespace yields
/// no empty tokens.
std::vector<std::u32string> split_words(std::u32string_view text);

}  // namespace tvmerge

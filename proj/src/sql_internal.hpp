#pragma once

#include <string>
#include <string_view>

namespace t2s::sql::detail {

/// Words that end an expression or introduce a clause; never read as
/// bare identifiers or implicit aliases.
bool is_reserved(std::string_view lower_word);

bool is_aggregate(std::string_view lower_name);

/// Backtick-quotes a case-folded identifier unless it is a plain word.
std::string quote_ident(const std::string& lower);

}  // namespace t2s::sql::detail

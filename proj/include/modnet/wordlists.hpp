#pragma once

#include <string>

namespace modnet {

/// Wh-words, auxiliaries, determiners, pronouns, prepositions, conjunctions
/// and very common verbs; everything noun extraction should discard.
bool is_stop_or_closed_class(const std::string& token);

/// Bundled common-noun list backing the abstract title filter.
bool is_common_noun(const std::string& token);

}  // namespace modnet

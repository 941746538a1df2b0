#pragma once

#include <map>
#include <string>
#include <vector>

#include "modnet/errors.hpp"

namespace modnet {

inline constexpr const char* kOtherAnswer = "<other>";

/// Ordered answer vocabulary: the top-K training answers plus a reserved
/// <other> class at the last index for everything outside the top K.
class AnswerVocab {
public:
    AnswerVocab() = default;

    /// Top-k answers by count, ties broken lexicographically.
    static AnswerVocab from_counts(const std::map<std::string, std::size_t>& counts,
                                   std::size_t k);
    static AnswerVocab from_tokens(std::vector<std::string> answers);

    /// Real answers, excluding <other>.
    std::size_t size() const { return answers_.size(); }
    /// Classifier dimension: answers plus the <other> slot.
    std::size_t num_classes() const { return answers_.size() + 1; }
    std::size_t other_index() const { return answers_.size(); }

    const std::string& token(std::size_t index) const;
    std::size_t index_or_other(const std::string& answer) const;

    const std::vector<std::string>& answers() const { return answers_; }

private:
    std::vector<std::string> answers_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace modnet

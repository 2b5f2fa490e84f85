#pragma once

#include <string>
#include <string_view>

namespace factcurve::prompts {

// Canonical prompt templates. These strings are frozen: cache keys are
// derived from rendered prompts, so any byte change here invalidates every
// recorded response. Golden-file tests pin the rendered forms.

/// Direct-Asking judgment prompt.
inline constexpr std::string_view kDirectAsking =
    "Following is a statement from a bio of {person}. "
    "Please check whether the statement is correct or wrong according to your knowledge.\n"
    "\n"
    "{claim}\n"
    "Is this statement true or false?";

/// Question-Answering judgment prompt.
inline constexpr std::string_view kQuestionAnswering =
    "Question: {q}\n"
    "Proposed Answer: {a}\n"
    "Is the proposed answer:\n"
    "(A) True\n"
    "(B) False\n"
    "The proposed answer is:";

/// Question-Answering judgment prompt with the "None of the above" option.
inline constexpr std::string_view kQaWithNoa =
    "Question: {q}\n"
    "Proposed Answer: {a}\n"
    "Is the proposed answer:\n"
    "(A) True\n"
    "(B) False\n"
    "(C) None of the above\n"
    "The proposed answer is:";

/// Question-answer derivation prompt. The "separetd" spelling is part of the
/// frozen template; fixing it would change every cache key.
inline constexpr std::string_view kQaDerivation =
    "Following is a fact from a bio of {person}. "
    "Please ask a question and provide the answer. "
    "The answer is as concise as you can, using a single phrase if possible. "
    "The answer is also part of the provided fact. "
    "The question and answer is separetd with #.\n"
    "\n"
    "{claim}";

/// Atomic-claim decomposition prompt (this project's own; no canonical
/// external form exists).
inline constexpr std::string_view kDecomposition =
    "You are given one sentence from a biography of {person}. "
    "List every atomic claim the sentence makes. "
    "An atomic claim is a short standalone statement containing exactly one piece of information. "
    "Write one claim per line, each line starting with \"- \". "
    "If the sentence makes no factual claim, write \"- NONE\".\n"
    "\n"
    "Biography:\n"
    "{context}\n"
    "\n"
    "Sentence:\n"
    "{sentence}";

/// Biography generation prompt.
inline constexpr std::string_view kBioGeneration = "Tell me a bio of {entity}.";

/// Question line appended to retrieval-augmented prompts.
inline constexpr std::string_view kRagQuestion = "Question: Tell me a bio of {entity}.";

/// Replaces every occurrence of `placeholder` in `tmpl` with `value`.
[[nodiscard]] inline std::string replace_all(std::string tmpl, std::string_view placeholder,
                                             std::string_view value) {
    std::size_t pos = 0;
    while ((pos = tmpl.find(placeholder, pos)) != std::string::npos) {
        tmpl.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
    return tmpl;
}

[[nodiscard]] inline std::string render_direct_asking(std::string_view person,
                                                      std::string_view claim) {
    auto s = replace_all(std::string(kDirectAsking), "{person}", person);
    return replace_all(std::move(s), "{claim}", claim);
}

[[nodiscard]] inline std::string render_question_answering(std::string_view question,
                                                           std::string_view answer) {
    auto s = replace_all(std::string(kQuestionAnswering), "{q}", question);
    return replace_all(std::move(s), "{a}", answer);
}

[[nodiscard]] inline std::string render_qa_with_noa(std::string_view question,
                                                    std::string_view answer) {
    auto s = replace_all(std::string(kQaWithNoa), "{q}", question);
    return replace_all(std::move(s), "{a}", answer);
}

[[nodiscard]] inline std::string render_qa_derivation(std::string_view person,
                                                      std::string_view claim) {
    auto s = replace_all(std::string(kQaDerivation), "{person}", person);
    return replace_all(std::move(s), "{claim}", claim);
}

[[nodiscard]] inline std::string render_decomposition(std::string_view person,
                                                      std::string_view context,
                                                      std::string_view sentence) {
    auto s = replace_all(std::string(kDecomposition), "{person}", person);
    s = replace_all(std::move(s), "{context}", context);
    return replace_all(std::move(s), "{sentence}", sentence);
}

[[nodiscard]] inline std::string render_bio_prompt(std::string_view entity) {
    return replace_all(std::string(kBioGeneration), "{entity}", entity);
}

[[nodiscard]] inline std::string render_rag_question(std::string_view entity) {
    return replace_all(std::string(kRagQuestion), "{entity}", entity);
}

} // namespace factcurve::prompts

#ifndef RAIE_MODEL_PROMPT_HPP
#define RAIE_MODEL_PROMPT_HPP

#include <raie/error.hpp>

#include <span>
#include <string>

namespace raie {

/// Fills the next-item prompt template used by language-model encoders.
inline std::string build_prompt(const std::string& user_id, std::span<const std::string> history) {
    if (history.empty()) throw Error(ErrorCode::EmptyHistory, "prompt needs at least one item");
    std::string items;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (i) items += ", ";
        items += history[i];
    }
    return "Here is the purchase history of user_" + user_id + ": item " + items +
           ". I wonder what is the next recommended item for the user. Answer:";
}

}  // namespace raie

#endif  // RAIE_MODEL_PROMPT_HPP

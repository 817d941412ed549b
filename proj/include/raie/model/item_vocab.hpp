#ifndef RAIE_MODEL_ITEM_VOCAB_HPP
#define RAIE_MODEL_ITEM_VOCAB_HPP

#include <raie/error.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace raie {

using ItemIndex = std::size_t;

inline constexpr ItemIndex kPaddingIndex = 0;

/// Bijection between raw item ids and contiguous indices; index 0 is padding.
class ItemVocab {
public:
    ItemVocab() : ids_{""} {}

    /// Returns the index of `id`, assigning the next free one on first sight.
    ItemIndex intern(const std::string& id) {
        if (auto it = index_.find(id); it != index_.end()) return it->second;
        const ItemIndex idx = ids_.size();
        ids_.push_back(id);
        index_.emplace(id, idx);
        return idx;
    }

    std::optional<ItemIndex> find(const std::string& id) const {
        if (auto it = index_.find(id); it != index_.end()) return it->second;
        return std::nullopt;
    }

    ItemIndex at(const std::string& id) const {
        if (auto idx = find(id)) return *idx;
        throw Error(ErrorCode::InvalidArgument, "unknown item id '" + id + "'");
    }

    const std::string& id(ItemIndex idx) const {
        if (idx == kPaddingIndex || idx >= ids_.size())
            throw Error(ErrorCode::InvalidArgument, "item index out of range");
        return ids_[idx];
    }

    /// Number of indices including padding.
    std::size_t size() const { return ids_.size(); }
    std::size_t item_count() const { return ids_.size() - 1; }

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, ItemIndex> index_;
};

}  // namespace raie

#endif  // RAIE_MODEL_ITEM_VOCAB_HPP

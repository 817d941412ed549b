#ifndef RAIE_REGION_REGION_STORE_HPP
#define RAIE_REGION_REGION_STORE_HPP

#include <raie/region/region_set.hpp>

#include <memory>
#include <mutex>

namespace raie {

/// Versioned holder for a RegionSet: readers take an immutable published version,
/// the single writer publishes replacements atomically.
class RegionStore {
public:
    explicit RegionStore(RegionSet initial)
        : current_(std::make_shared<const RegionSet>(std::move(initial))) {}

    std::shared_ptr<const RegionSet> current() const {
        std::lock_guard lock(mu_);
        return current_;
    }

    std::uint64_t version() const {
        std::lock_guard lock(mu_);
        return version_;
    }

    void publish(RegionSet next) {
        auto ptr = std::make_shared<const RegionSet>(std::move(next));
        std::lock_guard lock(mu_);
        current_ = std::move(ptr);
        ++version_;
    }

private:
    mutable std::mutex mu_;
    std::shared_ptr<const RegionSet> current_;
    std::uint64_t version_ = 0;
};

}  // namespace raie

#endif  // RAIE_REGION_REGION_STORE_HPP

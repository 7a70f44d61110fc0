#pragma once

#include <cstddef>
#include <memory_resource>

namespace fastr {

/// Memory resource that forwards to an upstream resource and records the
/// number of live bytes and the high-water mark. Used to measure the
/// transient allocations of the training loop.
class MemoryTracker final : public std::pmr::memory_resource {
public:
    explicit MemoryTracker(std::pmr::memory_resource* upstream = std::pmr::new_delete_resource())
        : upstream_(upstream) {}

    MemoryTracker(const MemoryTracker&) = delete;
    MemoryTracker& operator=(const MemoryTracker&) = delete;

    std::size_t live_bytes() const noexcept { return live_; }
    std::size_t peak_bytes() const noexcept { return peak_; }
    std::size_t total_allocations() const noexcept { return count_; }

    /// Restart peak tracking from the current live byte count.
    void reset_peak() noexcept { peak_ = live_; }

private:
    void* do_allocate(std::size_t bytes, std::size_t alignment) override;
    void do_deallocate(void* p, std::size_t bytes, std::size_t alignment) override;
    bool do_is_equal(const std::pmr::memory_resource& other) const noexcept override {
        return this == &other;
    }

    std::pmr::memory_resource* upstream_;
    std::size_t live_ = 0;
    std::size_t peak_ = 0;
    std::size_t count_ = 0;
};

} // namespace fastr

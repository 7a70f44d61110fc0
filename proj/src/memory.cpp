#include "fastr/memory.hpp"

#include <algorithm>

namespace fastr {

void* MemoryTracker::do_allocate(std::size_t bytes, std::size_t alignment) {
    void* p = upstream_->allocate(bytes, alignment);
    live_ += bytes;
    peak_ = std::max(peak_, live_);
    ++count_;
    return p;
}

void MemoryTracker::do_deallocate(void* p, std::size_t bytes, std::size_t alignment) {
    upstream_->deallocate(p, bytes, alignment);
    live_ -= bytes;
}

} // namespace fastr

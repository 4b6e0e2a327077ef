#pragma once

#include <atomic>
#include <cstddef>
#include <mutex>
#include <string>
#include <vector>

namespace lcdb {

/// Collects recoverable per-target / per-candidate failures. Thread safe.
class Diagnostics {
public:
    static constexpr std::size_t kMaxMessages = 32;

    void record(std::string message) {
        count_.fetch_add(1, std::memory_order_relaxed);
        std::lock_guard lock(mutex_);
        if (messages_.size() < kMaxMessages) messages_.push_back(std::move(message));
    }

    std::size_t count() const { return count_.load(std::memory_order_relaxed); }

    std::vector<std::string> messages() const {
        std::lock_guard lock(mutex_);
        return messages_;
    }

private:
    std::atomic<std::size_t> count_{0};
    mutable std::mutex mutex_;
    std::vector<std::string> messages_;
};

inline void note(Diagnostics* diag, std::string message) {
    if (diag != nullptr) diag->record(std::move(message));
}

}  // namespace lcdb

#pragma once

#include <stdexcept>
#include <vector>

namespace gcmot {

namespace detail {

template <typename Callback>
void partition_rec(int remaining, int max_part, std::vector<int>& parts, Callback& cb) {
    if (remaining == 0) {
        cb(static_cast<const std::vector<int>&>(parts));
        return;
    }
    for (int part = std::min(remaining, max_part); part >= 1; --part) {
        parts.push_back(part);
        partition_rec(remaining - part, part, parts, cb);
        parts.pop_back();
    }
}

}  // namespace detail

// Calls cb once per integer partition of n, parts in nonincreasing order.
// The same vector is reused between calls; copy it if it must outlive one.
template <typename Callback>
void for_each_partition(int n, Callback&& cb) {
    if (n < 1) throw std::invalid_argument("for_each_partition: n must be at least 1");
    std::vector<int> parts;
    detail::partition_rec(n, n, parts, cb);
}

}  // namespace gcmot

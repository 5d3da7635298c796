#pragma once

#include <cstddef>
#include <functional>

namespace dyn {

constexpr size_t kLargeStack = size_t{1} << 30;

// Runs f on a thread with the given stack size and rethrows whatever it throws.
void with_stack(const std::function<void()>& f, size_t bytes = kLargeStack);

}  // namespace dyn

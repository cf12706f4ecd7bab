#pragma once

#include <cstddef>
#include <functional>

namespace chainbound {

// Worker-count knob shared by all parallel sections. Zero means one worker per
// available hardware thread.
struct Workers {
  unsigned count = 0;

  unsigned resolved() const noexcept;
};

// Runs body(i) for every i in [0, n). Items are handed out in contiguous chunks;
// callers write results into slot i so the outcome does not depend on scheduling.
// The first exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t n, Workers workers, const std::function<void(std::size_t)>& body);

}  // namespace chainbound

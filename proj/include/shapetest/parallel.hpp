#pragma once

// Parallel loop helpers.  Tasks must write only to their own output slots;
// with that discipline the OpenMP path is bitwise equivalent to the serial
// reference, which the test suite asserts and the bench target times.

#include <cstdint>
#include <functional>

namespace shapetest::par {

// Worker cap: SHAPETEST_THREADS env var; 0 or unset means library default.
int configured_threads();

// Serial reference implementation, kept for testing and benchmarking.
void run_indexed_serial(std::int64_t count, const std::function<void(std::int64_t)>& task);

// OpenMP version; falls back to the serial loop when built without OpenMP
// or when the configured worker cap is 1.
void run_indexed(std::int64_t count, const std::function<void(std::int64_t)>& task);

// Contiguous [begin,end) ranges covering 0..count; each invocation may own
// scratch buffers for its whole range.  Serial reference runs one range.
void run_chunked_serial(std::int64_t count,
                        const std::function<void(std::int64_t, std::int64_t)>& task);
void run_chunked(std::int64_t count,
                 const std::function<void(std::int64_t, std::int64_t)>& task);

}  // namespace shapetest::par

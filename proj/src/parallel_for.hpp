#pragma once
// Internal OpenMP loop helper shared by the parallel kernels and trial drivers.

#include <cstddef>
#include <exception>

namespace uconf::detail {

// Runs body(i) for i in [0, n) across threads. The first exception thrown by
// any iteration is rethrown on the calling thread once the loop finishes.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    std::exception_ptr failure;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(uconf_parallel_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace uconf::detail

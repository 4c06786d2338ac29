#pragma once

#include <cstddef>
#include <functional>

namespace hexplane {

/// Worker count used when a caller passes threads <= 0.
int default_thread_count();

/// Runs fn(task, worker) for every task in [0, n_tasks) on up to `threads`
/// workers (worker < threads). Tasks are handed out dynamically, so callers
/// that need deterministic results must make each task's output independent
/// of which worker ran it. The first exception thrown by a task is rethrown.
void parallel_for(std::size_t n_tasks, int threads, const std::function<void(std::size_t, int)>& fn);

}  // namespace hexplane

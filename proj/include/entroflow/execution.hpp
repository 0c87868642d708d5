#pragma once

namespace entroflow {

// Parallel kernels produce results bit-identical to their serial references.
enum class Execution { serial, parallel };

// Caps OpenMP threads from ENTROFLOW_THREADS when set; returns the active thread count.
int configure_threads_from_env();

}  // namespace entroflow

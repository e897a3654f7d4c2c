#pragma once

namespace inspector {

// Kernels that fan out over independent work items accept an execution mode.
// The serial path is the reference; the parallel path must produce identical
// results because every work item writes to its own preassigned slot.
enum class Execution { serial, parallel };

// Thread cap from INSPECTOR_THREADS (unset or invalid -> OpenMP default).
int configured_threads();

// Applies configured_threads() to the OpenMP runtime. Safe to call repeatedly.
void apply_thread_cap();

}  // namespace inspector

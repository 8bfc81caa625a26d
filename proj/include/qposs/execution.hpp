#pragma once

namespace qposs {

/// Selects the serial reference kernel or its OpenMP counterpart.
/// Both produce bit-identical results.
enum class Execution { kSerial, kParallel };

} // namespace qposs

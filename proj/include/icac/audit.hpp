#pragma once

#include <iosfwd>

namespace icac {

// Library-side invariant sweeps: gradient checks against finite differences,
// ITM graph audits over a random stimulus stream, sum-tree consistency,
// imagination gate behavior, environment calibration, and a determinism
// smoke run. Prints one line per audit; returns true when all pass.
bool run_audits(std::ostream& os);

}  // namespace icac

#pragma once

namespace nlsobs {

// round(T / dt), rejecting non-integer ratios and non-positive inputs.
int checked_step_count(double T, double dt, const char* where);

}  // namespace nlsobs

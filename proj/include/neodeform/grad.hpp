#pragma once

#include <cstddef>
#include <cstdint>

#include "neodeform/biomech.hpp"

namespace neodeform {

/// dL/du for the total cost, by the adjoint of the stencil chain.
DisplacementField loss_gradient(const DisplacementField& u, const ScalarField& atrophy, const LabelField& labels,
                                const EnergyParams& params);

struct GradCheckReport {
    std::size_t n_probes = 0;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    bool pass = false;
};

/// Central-difference probes of the total cost at random (pixel, component)
/// pairs. Relative error is |analytic - numeric| / max(1, |numeric|).
GradCheckReport finite_diff_check(const DisplacementField& u, const ScalarField& atrophy, const LabelField& labels,
                                  const EnergyParams& params, std::size_t n_probes, double step, double tolerance,
                                  std::uint64_t seed);

}  // namespace neodeform

#pragma once

#include <string_view>
#include <vector>

#include "neodeform/biomech.hpp"

namespace neodeform {

struct SolveOptions {
    int max_iters = 2000;
    double learning_rate = 1e-2;  ///< pixels per step
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double stop_grad_norm = 1e-6;  ///< on the infinity norm of dL/du
    bool brain_only = false;       ///< prescribe atrophy on GM/WM/DGM only
};

enum class Termination { MaxIters, GradNorm, InversionBackoffExhausted };
std::string_view to_string(Termination t);

struct SolveReport {
    int iterations_run = 0;
    LossBreakdown final_loss;          ///< at the returned (best) iterate
    std::vector<double> loss_history;  ///< total loss of every accepted iterate, starting at u = 0
    double mse_atrophy = 0.0;          ///< brain-masked, against the input map
    double mse_atrophy_unmasked = 0.0;
    int lr_halvings = 0;
    Termination terminated_by = Termination::MaxIters;
};

struct SolveResult {
    DisplacementField displacement;
    SolveReport report;
};

/// Copy of `atrophy` with 1.0 on every CSF and background pixel.
ScalarField restrict_to_brain(const ScalarField& atrophy, const LabelField& labels);

/// Adam on the displacement field from u = 0. A step that inverts a material
/// pixel is rejected and the learning rate halved (at most 10 times).
/// Returns the lowest-loss iterate.
SolveResult solve_displacement(const ScalarField& atrophy, const LabelField& labels, const EnergyParams& params,
                               const SolveOptions& opts = {});

}  // namespace neodeform

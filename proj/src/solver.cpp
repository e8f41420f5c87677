#include "neodeform/solver.hpp"

#include <algorithm>
#include <cmath>

#include "neodeform/adam.hpp"
#include "neodeform/metrics.hpp"

namespace neodeform {

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::MaxIters: return "max_iters";
        case Termination::GradNorm: return "grad_norm";
        case Termination::InversionBackoffExhausted: return "inversion_backoff_exhausted";
    }
    return "unknown";
}

ScalarField restrict_to_brain(const ScalarField& atrophy, const LabelField& labels) {
    if (!atrophy.same_shape(labels)) throw Error(ErrorCode::ShapeMismatch, "atrophy map and labels differ in shape");
    ScalarField out = atrophy;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (!kBrainTissues.contains(labels[i])) out[i] = 1.0;
    return out;
}

namespace {

constexpr int kMaxHalvings = 10;

double inf_norm(const DisplacementField& g) {
    double n = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) n = std::max({n, std::abs(g.ux[i]), std::abs(g.uy[i])});
    return n;
}

}  // namespace

SolveResult solve_displacement(const ScalarField& atrophy, const LabelField& labels, const EnergyParams& params,
                               const SolveOptions& opts) {
    if (opts.max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
    if (!(opts.learning_rate > 0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be positive");

    const ScalarField prescribed = opts.brain_only ? restrict_to_brain(atrophy, labels) : atrophy;
    const LossModel model(prescribed, labels, params);

    DisplacementField u(atrophy.width(), atrophy.height());
    DisplacementField grad;
    LossBreakdown current = model.loss_and_gradient(u, grad);

    SolveResult result{u, {}};
    SolveReport& report = result.report;
    report.loss_history.push_back(current.total);
    report.final_loss = current;

    const AdamConfig config{opts.learning_rate, opts.adam_beta1, opts.adam_beta2, opts.adam_epsilon};
    Adam adam_x(u.size(), config), adam_y(u.size(), config);
    double lr = opts.learning_rate;

    DisplacementField trial, trial_grad;
    while (report.iterations_run < opts.max_iters) {
        if (inf_norm(grad) <= opts.stop_grad_norm) {
            report.terminated_by = Termination::GradNorm;
            break;
        }
        trial = u;
        Adam next_x = adam_x, next_y = adam_y;
        next_x.set_learning_rate(lr);
        next_y.set_learning_rate(lr);
        next_x.step(trial.ux.values(), grad.ux.values());
        next_y.step(trial.uy.values(), grad.uy.values());

        LossBreakdown trial_loss;
        try {
            trial_loss = model.loss_and_gradient(trial, trial_grad);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InvertedElement) throw;
            if (report.lr_halvings == kMaxHalvings) {
                report.terminated_by = Termination::InversionBackoffExhausted;
                break;
            }
            ++report.lr_halvings;
            lr *= 0.5;
            continue;
        }

        std::swap(u, trial);
        std::swap(grad, trial_grad);
        adam_x = std::move(next_x);
        adam_y = std::move(next_y);
        current = trial_loss;
        ++report.iterations_run;
        report.loss_history.push_back(current.total);
        if (current.total < report.final_loss.total) {
            report.final_loss = current;
            result.displacement = u;
        }
    }

    report.mse_atrophy = mse_atrophy(atrophy, result.displacement, labels, true);
    report.mse_atrophy_unmasked = mse_atrophy(atrophy, result.displacement, labels, false);
    return result;
}

}  // namespace neodeform

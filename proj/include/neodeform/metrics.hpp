#pragma once

#include "neodeform/field.hpp"

namespace neodeform {

/// Mean of (a - det F)^2; over GM/WM/DGM when `masked`, else over the full grid.
double mse_atrophy(const ScalarField& atrophy, const DisplacementField& u, const LabelField& mask, bool masked);

double mse_image(const ScalarField& x, const ScalarField& y);

/// 2|X n Y| / (|X| + |Y|) for one class; 1 when the class is absent from both.
double dice(const LabelField& x, const LabelField& y, Tissue cls);

}  // namespace neodeform

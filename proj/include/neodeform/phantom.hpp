#pragma once

#include <cstdint>

#include "neodeform/field.hpp"

namespace neodeform {

/// Wobbled concentric anatomy; radii are fractions of the grid size.
struct PhantomSpec {
    int size = 64;
    std::uint64_t seed = 0;
    double outer_radius_frac = 0.45;
    double csf_thickness_frac = 0.06;
    double gm_thickness_frac = 0.10;
    double dgm_radius_frac = 0.08;
    double boundary_wobble_amp = 0.03;
    int wobble_frequency = 5;

    void validate() const;
};

struct AtrophySpec {
    std::uint64_t seed = 0;
    double min_a = 0.85;
    double max_a = 1.05;
    int smoothing_radius = 4;
    bool restrict_to_brain = true;
    /// Give every CSF pixel the one value that keeps the summed map over
    /// CSF + brain equal to its pixel count (CSF expands as the brain shrinks).
    bool csf_compensation = false;

    void validate() const;
};

struct Phantom {
    LabelField labels;
    ScalarField intensity;
};

/// Separable box blur with a (2r+1)-wide window truncated at the edges,
/// applied `passes` times.
ScalarField box_blur(const ScalarField& f, int radius, int passes);

Phantom make_phantom(const PhantomSpec& spec);

/// Every `stride`-th pixel of a phantom, for grids below the generator's
/// minimum size.
Phantom subsample(const Phantom& phantom, int stride);
/// Smooth random map: uniform noise, blurred, then stretched onto [min_a, max_a].
ScalarField make_atrophy(const AtrophySpec& spec, const LabelField& labels);

/// Anatomy, image and atrophy map drawn from one seed. Sizes below the
/// generator minimum are produced by subsampling a larger phantom. The
/// atrophy seed is derived from `seed`; `atrophy.seed` is ignored.
struct PhantomCase {
    LabelField labels;
    ScalarField intensity;
    ScalarField atrophy;
};

PhantomCase make_case(int size, std::uint64_t seed, const AtrophySpec& atrophy = {});

}  // namespace neodeform

#include "neodeform/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "neodeform/random.hpp"

namespace neodeform {

namespace {

bool is_fraction(double f) { return f > 0.0 && f < 0.5; }

constexpr int kBlurPasses = 3;
constexpr int kIntensityBlurRadius = 2;
constexpr double kIntensityNoise = 0.05;

double base_intensity(Tissue t) {
    switch (t) {
        case Tissue::Background: return 0.0;
        case Tissue::Csf: return 0.1;
        case Tissue::Gm: return 0.5;
        case Tissue::Wm: return 0.8;
        case Tissue::Dgm: return 0.6;
    }
    return 0.0;
}

void blur_line(const double* in, double* out, int n, std::ptrdiff_t stride, int radius) {
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - radius), hi = std::min(n - 1, i + radius);
        double sum = 0.0;
        for (int k = lo; k <= hi; ++k) sum += in[k * stride];
        out[i * stride] = sum / (hi - lo + 1);
    }
}

}  // namespace

void PhantomSpec::validate() const {
    if (size < 32) throw Error(ErrorCode::InvalidSpec, "phantom size must be >= 32");
    for (double f : {outer_radius_frac, csf_thickness_frac, gm_thickness_frac, dgm_radius_frac})
        if (!is_fraction(f)) throw Error(ErrorCode::InvalidSpec, "phantom fractions must lie in (0, 0.5)");
    if (!(boundary_wobble_amp >= 0.0 && boundary_wobble_amp < 0.5))
        throw Error(ErrorCode::InvalidSpec, "wobble amplitude must lie in [0, 0.5)");
    if (wobble_frequency < 0) throw Error(ErrorCode::InvalidSpec, "wobble frequency must be >= 0");
    const double csf_inner = outer_radius_frac - csf_thickness_frac;
    const double gm_inner = csf_inner - gm_thickness_frac;
    if (!(csf_inner > gm_inner && gm_inner > dgm_radius_frac))
        throw Error(ErrorCode::InvalidSpec, "nested radii must be strictly decreasing");
}

void AtrophySpec::validate() const {
    if (!(min_a > 0.0 && min_a <= max_a)) throw Error(ErrorCode::InvalidSpec, "need 0 < min_a <= max_a");
    if (smoothing_radius < 0) throw Error(ErrorCode::InvalidSpec, "smoothing radius must be >= 0");
}

ScalarField box_blur(const ScalarField& f, int radius, int passes) {
    ScalarField cur = f, tmp(f.width(), f.height());
    if (radius <= 0) return cur;
    for (int p = 0; p < passes; ++p) {
        for (int y = 0; y < cur.height(); ++y)
            blur_line(&cur.values()[cur.index(0, y)], &tmp.values()[tmp.index(0, y)], cur.width(), 1, radius);
        for (int x = 0; x < cur.width(); ++x)
            blur_line(&tmp.values()[x], &cur.values()[x], cur.height(), cur.width(), radius);
    }
    return cur;
}

Phantom make_phantom(const PhantomSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const double two_pi = 2.0 * std::numbers::pi;
    const double shell_phase = rng.uniform(0.0, two_pi);
    const double dgm_phase = rng.uniform(0.0, two_pi);

    const int n = spec.size;
    const double c = 0.5 * (n - 1);
    const double r_out = spec.outer_radius_frac * n;
    const double r_csf = (spec.outer_radius_frac - spec.csf_thickness_frac) * n;
    const double r_gm = r_csf - spec.gm_thickness_frac * n;
    const double r_dgm = spec.dgm_radius_frac * n;

    Phantom out{LabelField(n, n), ScalarField(n, n)};
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double dx = x - c, dy = y - c;
            const double r = std::hypot(dx, dy);
            const double theta = std::atan2(dy, dx);
            // Same angular modulation for every shell keeps the nesting intact.
            const double shell = 1.0 + spec.boundary_wobble_amp * std::sin(spec.wobble_frequency * theta + shell_phase);
            const double core = 1.0 + spec.boundary_wobble_amp * std::sin(spec.wobble_frequency * theta + dgm_phase);
            Tissue t;
            if (r > r_out * shell) t = Tissue::Background;
            else if (r > r_csf * shell) t = Tissue::Csf;
            else if (r > r_gm * shell) t = Tissue::Gm;
            else if (r > r_dgm * core) t = Tissue::Wm;
            else t = Tissue::Dgm;
            out.labels(x, y) = t;
        }
    }

    ScalarField noise(n, n);
    for (double& v : noise.values()) v = rng.uniform(-1.0, 1.0);
    noise = box_blur(noise, kIntensityBlurRadius, kBlurPasses);
    double peak = 0.0;
    for (double v : noise.values()) peak = std::max(peak, std::abs(v));
    const double scale = peak > 0.0 ? kIntensityNoise / peak : 0.0;
    for (std::size_t i = 0; i < out.labels.size(); ++i) {
        const Tissue t = out.labels[i];
        if (t == Tissue::Background) continue;
        out.intensity[i] = std::clamp(base_intensity(t) + scale * noise[i], 0.0, 1.0);
    }
    return out;
}

Phantom subsample(const Phantom& phantom, int stride) {
    if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
    const int w = phantom.labels.width() / stride, h = phantom.labels.height() / stride;
    Phantom out{LabelField(w, h), ScalarField(w, h)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            out.labels(x, y) = phantom.labels(x * stride, y * stride);
            out.intensity(x, y) = phantom.intensity(x * stride, y * stride);
        }
    return out;
}

ScalarField make_atrophy(const AtrophySpec& spec, const LabelField& labels) {
    spec.validate();
    Rng rng(spec.seed);
    ScalarField a(labels.width(), labels.height());
    for (double& v : a.values()) v = rng.uniform(spec.min_a, spec.max_a);
    a = box_blur(a, spec.smoothing_radius, kBlurPasses);
    // Blurring narrows the spread; stretch back onto [min_a, max_a].
    const auto [lo_it, hi_it] = std::minmax_element(a.values().begin(), a.values().end());
    const double lo = *lo_it, hi = *hi_it;
    const double gain = hi > lo ? (spec.max_a - spec.min_a) / (hi - lo) : 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = std::clamp(spec.min_a + gain * (a[i] - lo), spec.min_a, spec.max_a);
        if (spec.restrict_to_brain && !kBrainTissues.contains(labels[i])) a[i] = 1.0;
    }
    if (spec.csf_compensation) {
        double deficit = 0.0;
        std::size_t csf = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (kBrainTissues.contains(labels[i])) deficit += 1.0 - a[i];
            csf += labels[i] == Tissue::Csf;
        }
        if (csf > 0) {
            const double value = 1.0 + deficit / static_cast<double>(csf);
            if (!(value > 0.0)) throw Error(ErrorCode::InvalidSpec, "CSF cannot compensate the prescribed growth");
            for (std::size_t i = 0; i < a.size(); ++i)
                if (labels[i] == Tissue::Csf) a[i] = value;
        }
    }
    return a;
}

PhantomCase make_case(int size, std::uint64_t seed, const AtrophySpec& atrophy) {
    if (size < 2) throw Error(ErrorCode::InvalidSpec, "size must be >= 2");
    constexpr int kMinSize = 32;
    const int stride = size >= kMinSize ? 1 : (kMinSize + size - 1) / size;
    PhantomSpec spec;
    spec.size = size * stride;
    spec.seed = seed;
    Phantom ph = make_phantom(spec);
    if (stride > 1) ph = subsample(ph, stride);
    AtrophySpec as = atrophy;
    as.seed = seed + 0x9E3779B97F4A7C15ULL;
    ScalarField a = make_atrophy(as, ph.labels);
    return {std::move(ph.labels), std::move(ph.intensity), std::move(a)};
}

}  // namespace neodeform

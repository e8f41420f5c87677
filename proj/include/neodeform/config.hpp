#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "neodeform/biomech.hpp"

namespace neodeform {

/// Experiment settings read from `key = value` lines; '#' starts a comment.
/// Unknown keys are rejected. Missing keys keep the defaults below.
struct RunConfig {
    EnergyParams energy;                  // convention, mu_tissue, mu_csf, bulk_ratio, lambda1, lambda2
    std::optional<double> learning_rate;  // unset: solve uses 1e-2, train uses 1e-4
    int max_iters = 2000;
    int epochs = 1000;
    int batch_size = 8;
    std::uint64_t seed = 0;
    bool brain_only = false;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
std::string format_config(const RunConfig& config);

}  // namespace neodeform

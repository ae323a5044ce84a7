#pragma once

#include "canopyforge/losses.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace canopyforge {

using TensorMap = std::map<std::string, Tensor>;

/// A loss evaluated on named inputs; grads of the result are keyed by the
/// same names.
using LossKernel = std::function<LossResult(const TensorMap&)>;

struct GradCheckOptions {
    double eps = 1e-6;
    std::size_t samples = 64; ///< coordinates per input (all when fewer)
    std::uint64_t seed = 42;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t coords_checked = 0;
    std::map<std::string, double> per_input; ///< max relative error per input
};

/// Compares analytic gradients against central differences on a random
/// subsample of coordinates of every input that has an analytic gradient.
/// Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
GradCheckResult finite_difference_check(const LossKernel& kernel, const TensorMap& inputs,
                                        const GradCheckOptions& opts = {});

struct GradCheckCase {
    std::string name;
    LossKernel kernel;
    TensorMap inputs;
};

/// One case per loss kernel on 16x16 maps (features 8x16x16), with inputs
/// constructed away from every non-differentiable point.
std::vector<GradCheckCase> standard_gradcheck_cases(std::uint64_t seed = 42);

} // namespace canopyforge

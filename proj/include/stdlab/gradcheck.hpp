#pragma once

#include <functional>
#include <string>

#include "stdlab/params.hpp"

namespace stdlab {

struct GradCheckReport {
    double max_rel_err = 0.0;
    uint64_t coords_checked = 0;
    std::string worst_coord;
    bool passed = false;
};

// Central-difference verification of analytic gradients. loss_fn must be a pure
// function of the parameter values. A coordinate passes when
// |fd - ad| < abs_escape or |fd - ad| / max(|fd|, |ad|) < tol.
GradCheckReport check_gradients(const std::function<double(const ParamStore&)>& loss_fn,
                                const ParamStore& params, const ParamStore& analytic,
                                double h = 1e-5, double tol = 1e-4, double abs_escape = 1e-7);

// Standing check over randomized student/discriminator configurations; exercises
// the consistency jump, feature map, and hinge paths. Returns worst report.
GradCheckReport run_standard_gradcheck(uint64_t seed, int n_configs = 5, bool verbose = false);

}  // namespace stdlab

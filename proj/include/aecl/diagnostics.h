#pragma once

#include <cstdint>

namespace aecl {

struct GradCheckSuite {
    int instances = 0;
    double dense_max_error = 0.0;  // dense and activation stacks
    double conv_max_error = 0.0;   // conv, pool, transpose and crop stacks
};

/// Randomised finite-difference checks of both layer families.
GradCheckSuite run_gradcheck_suite(int instances, std::uint64_t seed);

}  // namespace aecl

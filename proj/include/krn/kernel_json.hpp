#pragma once

#include <iosfwd>
#include <string>

#include "krn/measure_core.hpp"

namespace krn {

/// Kernel JSON schema: {"labels_in": [...], "labels_out": [...],
/// "mu": [...], "matrix": [[...], ...]}. Numbers are written with 17
/// significant digits; the target weights are recomputed on read.
std::string kernel_to_json(const KernelMorphism& f);

KernelMorphism kernel_from_json(const std::string& text);
KernelMorphism kernel_from_json_stream(std::istream& in);

}  // namespace krn

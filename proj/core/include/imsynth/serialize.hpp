#pragma once

// Algorithm files: a JSON document
//
//   {
//     "format": "imsynth-algorithm",
//     "version": 1,
//     "A": [[...], ...], "B": [[b0], ...], "C": [[c0, ...]],
//     "mu": 1.0, "L": 10.0, "rho": 0.9672,
//     "harmonics": [[re, im], ...],
//     "provenance": {"key": "value", ...}
//   }
//
// Matrices are nested row-major arrays. Numbers round-trip exactly.

#include <filesystem>
#include <string>
#include <string_view>

#include "imsynth/plant.hpp"

namespace imsynth::serialize {

/// Deterministic text (sorted keys, two-space indent, trailing newline).
std::string algorithm_to_json(const plant::Algorithm& alg);

/// Throws FormatError on malformed input and the Algorithm constructor's
/// errors on invalid matrices.
plant::Algorithm algorithm_from_json(std::string_view text);

/// Throws IoError when the file cannot be written or read.
void save_algorithm(const std::filesystem::path& path, const plant::Algorithm& alg);
plant::Algorithm load_algorithm(const std::filesystem::path& path);

}  // namespace imsynth::serialize

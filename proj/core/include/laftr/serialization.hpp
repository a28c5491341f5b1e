#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "laftr/model.hpp"

namespace laftr {

/// "%.17g": enough digits for any double to survive a text round trip.
std::string format_real(double value);

/// Contents of a model file.
struct ModelFile {
  ModelState state;
  std::vector<double> objective_trace;
  std::uint64_t seed = 0;
};

/// {"k", "lambda", "z", "w", "objective_trace", "seed"}; row-major arrays,
/// reals at 17 significant digits. Output depends only on the arguments.
void write_model_json(std::ostream& out, const ModelState& state, const std::vector<double>& objective_trace,
                      std::uint64_t seed);

/// Throws ParseError on malformed JSON or inconsistent shapes.
ModelFile read_model_json(std::istream& in);

/// Generator sidecar: {"z": [[0|1]], "w": [[real]]}.
void write_truth_json(std::ostream& out, const BinaryMatrix& z, const RealMatrix& w);

}  // namespace laftr

#include "laftr/serialization.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "laftr/error.hpp"

namespace laftr {

namespace {

void write_binary_rows(std::ostream& out, const BinaryMatrix& z) {
  out << '[';
  for (std::size_t i = 0; i < z.rows(); ++i) {
    out << (i ? ",\n    [" : "\n    [");
    for (std::size_t k = 0; k < z.cols(); ++k) out << (k ? "," : "") << static_cast<int>(z(i, k));
    out << ']';
  }
  out << (z.rows() ? "\n  ]" : "]");
}

void write_real_rows(std::ostream& out, const RealMatrix& w) {
  out << '[';
  for (std::size_t a = 0; a < w.rows(); ++a) {
    out << (a ? ",\n    [" : "\n    [");
    for (std::size_t b = 0; b < w.cols(); ++b) out << (b ? ", " : "") << format_real(w(a, b));
    out << ']';
  }
  out << (w.rows() ? "\n  ]" : "]");
}

}  // namespace

std::string format_real(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void write_model_json(std::ostream& out, const ModelState& state, const std::vector<double>& objective_trace,
                      std::uint64_t seed) {
  out << "{\n  \"k\": " << state.k_plus() << ",\n  \"lambda\": " << format_real(state.lambda())
      << ",\n  \"n\": " << state.n() << ",\n  \"z\": ";
  write_binary_rows(out, state.z());
  out << ",\n  \"w\": ";
  write_real_rows(out, state.w());
  out << ",\n  \"objective_trace\": [";
  for (std::size_t t = 0; t < objective_trace.size(); ++t)
    out << (t ? ", " : "") << format_real(objective_trace[t]);
  out << "],\n  \"seed\": " << seed << "\n}\n";
}

ModelFile read_model_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  try {
    const auto k = doc.at("k").get<std::size_t>();
    const auto lambda = doc.at("lambda").get<double>();
    const auto& z_rows = doc.at("z");
    const auto& w_rows = doc.at("w");
    if (!z_rows.is_array() || !w_rows.is_array()) throw ParseError("model file: z and w must be arrays");
    // "n" disambiguates the node count when k = 0 and every z row is empty.
    const std::size_t n = doc.contains("n") ? doc.at("n").get<std::size_t>() : z_rows.size();
    if (z_rows.size() != n) throw ParseError("model file: z has " + std::to_string(z_rows.size()) + " rows, n is " + std::to_string(n));
    BinaryMatrix z(n, k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (z_rows[i].size() != k) throw ParseError("model file: z row " + std::to_string(i) + " does not have k entries");
      for (std::size_t a = 0; a < k; ++a) {
        const int v = z_rows[i][a].get<int>();
        if (v != 0 && v != 1) throw ParseError("model file: z entries must be 0 or 1");
        z(i, a) = static_cast<std::uint8_t>(v);
      }
    }
    if (w_rows.size() != k) throw ParseError("model file: w must be k x k");
    RealMatrix w(k, k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
      if (w_rows[a].size() != k) throw ParseError("model file: w must be k x k");
      for (std::size_t b = 0; b < k; ++b) w(a, b) = w_rows[a][b].get<double>();
    }
    ModelFile file{ModelState(std::move(z), std::move(w), lambda), {}, 0};
    if (doc.contains("objective_trace")) file.objective_trace = doc.at("objective_trace").get<std::vector<double>>();
    if (doc.contains("seed")) file.seed = doc.at("seed").get<std::uint64_t>();
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

void write_truth_json(std::ostream& out, const BinaryMatrix& z, const RealMatrix& w) {
  out << "{\n  \"k\": " << z.cols() << ",\n  \"z\": ";
  write_binary_rows(out, z);
  out << ",\n  \"w\": ";
  write_real_rows(out, w);
  out << "\n}\n";
}

}  // namespace laftr

#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "mvb/distribution.hpp"
#include "mvb/glm.hpp"
#include "mvb/ising.hpp"

namespace mvb {

// JSON text formats. Floats are written in shortest round-trip form.
//
// NaturalParams: {"1": f, "2": f, "1,2": f, ...}, every nonempty subset in
//   mask order. On reading, k is the largest node index that appears and
//   absent subsets are zero.
// GeneralParams: {"k": k, "probs": [p(y) for y in mask order]}.
// MvbGlmModel:   {"k", "p", "coef": {"1": [c_0..c_p], ...}, "converged",
//   "iterations", "final_nll"}; every subset must be present on reading.
// IsingParams:   {"theta": [[...], ...]} (k x k nested array).
//
// Readers throw std::invalid_argument on malformed input.

std::string to_json(const NaturalParams& f);
std::string to_json(const GeneralParams& p);
std::string to_json(const MvbGlmModel& model);
std::string to_json(const IsingParams& theta);

NaturalParams natural_from_json(std::string_view text, bool force_large = false);
GeneralParams general_from_json(std::string_view text, bool force_large = false);
MvbGlmModel model_from_json(std::string_view text, bool force_large = false);
IsingParams ising_from_json(std::string_view text);

enum class JsonKind { natural, general, model, ising };
/// Classifies a parameter document by its fields.
JsonKind detect_json_kind(std::string_view text);

/// Reads a dataset from CSV with a header row. Outcome columns are named
/// y1..yK and covariate columns x1..xp; they are matched by name, so any
/// column order is accepted. Errors name the line and column.
Dataset read_csv(std::istream& in, bool force_large = false);

/// "y1,...,yK" header, then one 0/1 row per outcome.
std::string outcomes_to_csv(const std::vector<Outcome>& rows, int k);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace mvb

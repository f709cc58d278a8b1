#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "sinkdist/measures.hpp"

namespace sinkdist {

// Text embedding format:
//
//   n d
//   x_11 ... x_1d
//   ...
//   x_n1 ... x_nd
//   weights: w_1 ... w_n        (optional)
//
// Parse failures throw Error(kParseError) with "<source>:<line>: ..." in the
// message; measure contract violations propagate from MakeMeasure.
EmpiricalMeasure ReadEmbedding(std::istream& in, const std::string& source_name);
EmpiricalMeasure ReadEmbeddingFile(const std::filesystem::path& path);

void WriteEmbedding(std::ostream& out, const EmpiricalMeasure& measure,
                    bool include_weights);

}  // namespace sinkdist

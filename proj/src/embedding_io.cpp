#include "sinkdist/embedding_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

#include "sinkdist/error.hpp"
#include "sinkdist/format.hpp"

namespace sinkdist {
namespace {

std::vector<std::string> Tokenize(const std::string& line) {
  std::istringstream stream(line);
  std::vector<std::string> tokens;
  for (std::string token; stream >> token;) tokens.push_back(std::move(token));
  return tokens;
}

[[noreturn]] void Fail(const std::string& source, int line, const std::string& what) {
  throw Error(ErrorCode::kParseError, source + ":" + std::to_string(line) + ": " + what);
}

double ParseReal(const std::string& token, const std::string& source, int line) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) Fail(source, line, "not a number: '" + token + "'");
  return value;
}

std::size_t ParseCount(const std::string& token, const std::string& source, int line) {
  std::size_t value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) Fail(source, line, "not a count: '" + token + "'");
  return value;
}

}  // namespace

EmpiricalMeasure ReadEmbedding(std::istream& in, const std::string& source_name) {
  std::string line;
  int line_no = 0;
  auto next_nonblank = [&](std::vector<std::string>& tokens) {
    while (std::getline(in, line)) {
      ++line_no;
      tokens = Tokenize(line);
      if (!tokens.empty()) return true;
    }
    return false;
  };

  std::vector<std::string> tokens;
  if (!next_nonblank(tokens)) Fail(source_name, line_no, "missing 'n d' header");
  if (tokens.size() != 2) Fail(source_name, line_no, "header must be 'n d'");
  const std::size_t n = ParseCount(tokens[0], source_name, line_no);
  const std::size_t d = ParseCount(tokens[1], source_name, line_no);
  if (n == 0) Fail(source_name, line_no, "n must be >= 1");
  if (d == 0) Fail(source_name, line_no, "d must be >= 1");

  Matrix support(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    if (!next_nonblank(tokens)) {
      Fail(source_name, line_no,
           "expected " + std::to_string(n) + " points, found " + std::to_string(i));
    }
    if (tokens[0].rfind("weights:", 0) == 0) {
      Fail(source_name, line_no,
           "expected " + std::to_string(n) + " points, found " + std::to_string(i));
    }
    if (tokens.size() != d) {
      Fail(source_name, line_no,
           "expected " + std::to_string(d) + " values, found " + std::to_string(tokens.size()));
    }
    for (std::size_t k = 0; k < d; ++k) support(i, k) = ParseReal(tokens[k], source_name, line_no);
  }

  std::optional<std::vector<double>> weights;
  if (next_nonblank(tokens)) {
    if (tokens[0].rfind("weights:", 0) != 0) {
      Fail(source_name, line_no, "unexpected content after " + std::to_string(n) + " points");
    }
    const int weights_line = line_no;
    // "weights:1" and "weights: 1" are both accepted.
    std::vector<std::string> values;
    if (tokens[0].size() > 8) values.push_back(tokens[0].substr(8));
    values.insert(values.end(), tokens.begin() + 1, tokens.end());
    if (values.size() != n) {
      Fail(source_name, weights_line,
           "expected " + std::to_string(n) + " weights, found " + std::to_string(values.size()));
    }
    std::vector<double> w;
    w.reserve(n);
    for (const auto& v : values) w.push_back(ParseReal(v, source_name, weights_line));
    weights = std::move(w);
    if (next_nonblank(tokens)) Fail(source_name, line_no, "unexpected content after weights");
  }

  try {
    return MakeMeasure(std::move(support), std::move(weights));
  } catch (const Error& e) {
    throw Error(e.code(), source_name + ": " + e.what());
  }
}

EmpiricalMeasure ReadEmbeddingFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, path.string() + ": cannot open file");
  return ReadEmbedding(in, path.string());
}

void WriteEmbedding(std::ostream& out, const EmpiricalMeasure& measure, bool include_weights) {
  out << measure.size() << ' ' << measure.dim() << '\n';
  for (std::size_t i = 0; i < measure.size(); ++i) {
    const auto p = measure.point(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (k) out << ' ';
      out << FormatReal(p[k]);
    }
    out << '\n';
  }
  if (include_weights) {
    out << "weights:";
    for (double w : measure.weights()) out << ' ' << FormatReal(w);
    out << '\n';
  }
}

}  // namespace sinkdist

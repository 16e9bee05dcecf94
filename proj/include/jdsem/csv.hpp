#pragma once

// Path files: header "t,X1,...,Xp", one observation per row, equally spaced
// t, every number written with 17 significant digits.

#include "jdsem/quasi_lik.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace jdsem {

[[nodiscard]] std::string format_real(double v);

void write_path_csv(const PathData& path, std::ostream& out);
void write_path_csv(const PathData& path, const std::filesystem::path& file);

// Throws NonUniformGrid (relative spacing error > 1e-9), MalformedRow, or
// TooFewRows (fewer than 3 observations).
[[nodiscard]] PathData read_path_csv(std::istream& in);
[[nodiscard]] PathData ingest_csv(const std::filesystem::path& file);

// Whitespace, comma or newline separated reals; '#' starts a comment.
[[nodiscard]] std::vector<double> read_theta_file(const std::filesystem::path& file);

}  // namespace jdsem

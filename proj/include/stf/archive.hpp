#pragma once

#include "stf/panel.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace stf {

// Folded-tensor archive, a line-oriented text file:
//
//   stf-tensor-archive 1
//   providers <id> ...
//   periods <S1> ... <SM>
//   dims <N> <S1> ... <SM>
//   count <T>
//   <YYYY-MM-DDTHH:MM:SS> <v0> <v1> ...     (T lines)
//
// Each data line holds one period's tensor in canonical order (provider
// index fastest, then S1, ..., SM). Values use shortest round-trip decimal
// form, so write -> read reproduces every double exactly.
void write_tensor_archive(const std::filesystem::path& path, const TensorSeries& ts);
TensorSeries read_tensor_archive(const std::filesystem::path& path);

void write_tensor_archive(std::ostream& out, const TensorSeries& ts);
TensorSeries read_tensor_archive(std::istream& in, const std::string& source);

// Shortest decimal that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace stf

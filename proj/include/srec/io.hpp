#pragma once

#include <string>

#include "srec/ensemble.hpp"
#include "srec/lsh.hpp"
#include "srec/types.hpp"

namespace srec {

// "SREC1" container: little-endian header {magic, m:u32, n:u32} followed by
// m·n float64 column-major entries, optionally followed by a problem
// extension block (b, truth, noise, seed). Exact layout in docs/FILE_FORMATS.md.

void save_matrix(const DenseMatrix& a, const std::string& path);
DenseMatrix load_matrix(const std::string& path);

void save_problem(const MeasurementProblem& problem, const std::string& path);
MeasurementProblem load_problem(const std::string& path);

// "SLSH1" container for a serialized index: parameters, hyperplanes and the
// per-table (key, bucket) pairs in ascending key order.

void save_index(const LshIndex& index, const std::string& path);
LshIndex load_index(const std::string& path);

}  // namespace srec

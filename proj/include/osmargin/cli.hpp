#ifndef OSMARGIN_CLI_HPP
#define OSMARGIN_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

#include "osmargin/config.hpp"

namespace osm {

// Command bodies behind the `osmargin` executable. Each writes its artifacts
// under config.out_dir and logs progress to `out`; ConfigError propagates to
// the caller (exit 2), any other exception is a runtime failure (exit 1).
//
// Artifacts: train -> report.csv, summary.txt, model.ckpt; sweep -> sweep.csv;
// compare -> compare.csv; ocr-compare -> ocr.csv. Reruns with identical
// configs produce byte-identical CSVs.

void run_train(const RunConfig& config, std::ostream& out);
void run_sweep(const RunConfig& config, std::ostream& out);
void run_compare(const RunConfig& config, std::ostream& out);
void run_ocr_compare(const RunConfig& config, std::ostream& out);

// Finite-difference verification of every analytic gradient; returns true
// when all suites meet their tolerances. count = 0 passes with a warning.
bool run_gradcheck(uint64_t seed, int count, std::ostream& out);

// Worker-thread cap for sweep/compare cells: OSMARGIN_THREADS when set,
// hardware concurrency otherwise, always at least 1.
int worker_threads();

}  // namespace osm

#endif

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "spkn/config.hpp"
#include "spkn/data.hpp"
#include "spkn/pipeline.hpp"
#include "spkn/stats.hpp"

namespace spkn {

struct BenchRow {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  StageTimes times;  // train + eval combined
};

struct BenchReport {
  RunStats stats;
  std::vector<BenchRow> rows;
};

inline constexpr const char* kBenchCsvHeader =
    "run,seed,acc,t_preprocess,t_train,t_features,t_classify,t_total";

/// `repeats` full train + eval cycles with seeds cfg.seed + i. Each finished
/// run is appended to `csv` (header first) as it completes.
BenchReport run_bench(const PipelineConfig& cfg, const Dataset& train, const Dataset& test,
                      std::size_t repeats, std::ostream* csv = nullptr);

/// "acc mean +- sd" and "time mean +- sd" lines.
void write_bench_summary(std::ostream& os, const BenchReport& report);

}  // namespace spkn

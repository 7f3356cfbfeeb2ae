#include "spkn/bench.hpp"

#include <ostream>
#include <stdexcept>

namespace spkn {

BenchReport run_bench(const PipelineConfig& cfg, const Dataset& train, const Dataset& test,
                      std::size_t repeats, std::ostream* csv) {
  if (repeats < 2) {
    throw std::invalid_argument("bench needs at least two repeats");
  }
  BenchReport report;
  if (csv) *csv << kBenchCsvHeader << '\n';
  for (std::size_t i = 0; i < repeats; ++i) {
    PipelineConfig c = cfg;
    c.seed = cfg.seed + i;
    const TrainReport trained = run_train(c, train);
    const EvalReport eval = run_eval(trained.model, test);
    BenchRow row{i, c.seed, eval.accuracy, trained.times};
    row.times += eval.times;
    report.rows.push_back(row);
    report.stats.samples.push_back({eval.accuracy, row.times.total()});
    if (csv) {
      *csv << row.run << ',' << row.seed << ',' << row.accuracy << ',' << row.times.preprocess
           << ',' << row.times.train << ',' << row.times.features << ',' << row.times.classify
           << ',' << row.times.total() << '\n'
           << std::flush;
    }
  }
  return report;
}

void write_bench_summary(std::ostream& os, const BenchReport& report) {
  const auto acc = report.stats.accuracies();
  const auto time = report.stats.wall_times();
  os << "runs " << report.stats.size() << "\n"
     << "acc " << mean(acc) << " +- " << stddev(acc) << " (SD)\n"
     << "time_s " << mean(time) << " +- " << stddev(time) << " (SD)\n";
}

}  // namespace spkn

// Minimal library usage: load a log, search for a model, print its graph.
//   discover_example <log.csv> [order-column]

#include <iostream>

#include "ekgdisc/ekgdisc.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: discover_example <log.csv> [order-column]\n";
    return 2;
  }
  try {
    ekgdisc::IngestConfig ingest;
    if (argc > 2) ingest.order_column = argv[2];
    const auto table = ekgdisc::load_event_table(argv[1], ingest);
    const auto samples = ekgdisc::sample_observations(table, 1, table.size(), 0,
                                                      ekgdisc::SamplingScheme::Partition);

    ekgdisc::SearchConfig config;
    config.first_pass_budget = ekgdisc::Budget::nodes(10000);
    const auto result = ekgdisc::discover(table, samples, config);

    std::cout << "model: " << result.best_model.label() << "\n"
              << "log2 score: " << result.best_score.score_hi
              << (result.best_score.exact ? "" : " (upper bound)") << "\n\n";
    std::cout << ekgdisc::export_dot(ekgdisc::build_poset(samples[0], result.best_model),
                                     result.best_model);
  } catch (const ekgdisc::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}

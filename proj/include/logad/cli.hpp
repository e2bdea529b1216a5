#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "logad/config.hpp"

namespace logad {

/// Exit codes: 0 success, 1 stage error, 2 usage/configuration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_anonymize(const RunConfig& cfg, std::ostream& log);
int cmd_featurize(const RunConfig& cfg, std::ostream& log);
int cmd_train(const RunConfig& cfg, std::ostream& log);
int cmd_detect(const RunConfig& cfg, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::ostream& log);
int cmd_synth(const RunConfig& cfg, std::ostream& log);

/// anonymize -> featurize -> train -> detect without touching the filesystem.
/// Returns the anomaly report CSV.
std::string run_pipeline_in_memory(std::string_view corpus_text, const RunConfig& cfg);

}  // namespace logad

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "nelson/config.hpp"

namespace nelson {

struct CriterionInfo {
  int id;
  const char* name;
  const char* summary;
};

const std::vector<CriterionInfo>& acceptance_criteria();

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

// cfg is the reference run configuration; its acceptance tolerances are honoured.
std::vector<CriterionResult> run_acceptance(const RunConfig& cfg, int threads,
                                            std::ostream* progress = nullptr,
                                            const std::vector<int>& only = {});

std::string format_result(const CriterionResult& r);

// configs/reference.json of the source tree
std::string reference_config_path();

}  // namespace nelson

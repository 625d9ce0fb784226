#pragma once

#include <ostream>
#include <string>

#include "nelson/config.hpp"

namespace nelson {

// Each command writes its CSV tables and ledger_<command>.json under out_dir. Ledger failures are
// findings, not errors: the return value is 0 unless a hard error occurred.
int cmd_cascade(const RunConfig& cfg, const std::string& out_dir, int threads, std::ostream& log);
int cmd_dispersion(const RunConfig& cfg, const std::string& out_dir, int threads, std::ostream& log);
int cmd_scatter(const RunConfig& cfg, const std::string& out_dir, int threads, std::ostream& log);

// Runs the acceptance suite; nonzero iff a criterion fails.
int cmd_validate(const RunConfig& cfg, int threads, std::ostream& out);
void list_criteria(std::ostream& out);

}  // namespace nelson

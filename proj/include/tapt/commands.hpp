#pragma once

#include "tapt/run_config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace tapt {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInternal = 3 };

// Each command reads its inputs from `config`, writes artifacts under
// config.out and reports progress on `log`. Failures are thrown: UsageError,
// DataError, or anything else for internal faults.

/// <out>/features.tsv: "id\tcleaned\tflow\temoji_count" per post, then a
/// "# labels ..." histogram line.
void cmd_preprocess(const RunConfig& config, std::ostream& log);

/// <out>/vocab.txt, tapt_corpus.txt, tapt.ckpt and tapt_loss.csv.
void cmd_tapt(const RunConfig& config, std::ostream& log);

/// <out>/init_encoders.ckpt, model_<task>.ckpt and trace_<task>.csv for the
/// five tasks, plus vocab.txt.
void cmd_finetune(const RunConfig& config, std::ostream& log);

/// <out>/metrics.txt and metrics_table.txt from the model checkpoints in
/// config.out.
void cmd_evaluate(const RunConfig& config, std::ostream& log);

/// "id\ttags" per post on `out`, mirrored to <out>/predictions.tsv.
void cmd_predict(const RunConfig& config, std::ostream& out);

/// Parses the command line, runs the selected subcommand and maps failures to
/// exit codes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tapt

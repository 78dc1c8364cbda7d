#pragma once

#include <lfs/experiment/commands.hpp>

#include "oracles.hpp"

#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

inline CliResult run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = lfs::experiment::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

inline std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// A few-second configuration: 10 identities, 3 epochs.
inline std::string small_config_json()
{
    return R"({
  "dataset": {"classes": 10, "dim": 8, "samples_per_class": 10, "train_frac": 0.6,
              "val_pairs": 40, "test_pairs": 40},
  "model": {"hidden": [16], "embedding_dim": 8},
  "sgd": {"batch_size": 16},
  "schedule": {"epochs": 3, "drop_epochs": [2]},
  "eval": {"far": [0.1, 0.001]}
})";
}

} // namespace oracle

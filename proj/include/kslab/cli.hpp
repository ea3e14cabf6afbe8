#pragma once

// Subcommand entry points: run / sweep / theory / verify. Each returns the
// process exit code; file artifacts land in the resolved output directory.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kslab/config.hpp"

namespace kslab::cli {

inline constexpr int kExitConverged = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUndecided = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitConfig = 64;
inline constexpr int kExitInternal = 70;

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;  // --set key.path=value
    std::optional<std::string> out_dir;  // --out
    std::optional<std::uint64_t> seed;   // --seed
    std::optional<int> workers;          // --workers (sweep only)
};

int cmd_run(const CommonOpts& opts, std::ostream& out, std::ostream& err);
int cmd_theory(const CommonOpts& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommonOpts& opts, std::ostream& out, std::ostream& err);
int cmd_verify(const CommonOpts& opts, std::ostream& out, std::ostream& err);

// Precedence: --out flag, config output_dir, KS_LAB_OUT, then "out".
std::string resolve_output_dir(const std::optional<std::string>& flag_out,
                               const std::string& config_out);

}  // namespace kslab::cli

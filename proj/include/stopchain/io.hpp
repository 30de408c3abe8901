#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stopchain/elimination.hpp"
#include "stopchain/generator.hpp"
#include "stopchain/payoff.hpp"

namespace stopchain {

/// A chain plus payoff as exchanged through model files.
struct Model {
    Generator generator;
    PayoffVector payoff;
    std::vector<std::string> labels;
};

/// Parses the JSON model schema
///   {"n_states": int, "rates": [[from, to, rate], ...], "payoff": [...],
///    "r": float, "labels": [optional strings]}
/// Syntax errors report line and column. With `check_invariants`, every
/// generator/payoff violation is raised as a ModelError as well.
Model parse_model(std::string_view text, bool check_invariants = true);
Model load_model(const std::filesystem::path& path, bool check_invariants = true);

std::string dump_model(const Model& model);
void save_model(const std::filesystem::path& path, const Model& model);

/// {"value", "stopping_set", "iterations", "trace", "converged"}.
std::string report_to_json(const SolverReport& report);

/// Round-trip exact decimal rendering (17 significant digits, '.' separator).
std::string format_double(double v);

/// Writes `text` to `path`, throwing std::runtime_error on I/O failure.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace stopchain

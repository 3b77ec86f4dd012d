#pragma once

#include "hairgs/appearance.hpp"
#include "hairgs/dynamics.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hairgs {

/// Everything a pipeline run reads from its `key = value` config file. Keys
/// are the snake_case field names of HairParams and SimConfig plus the
/// pipeline settings below.
struct PipelineConfig {
  // paths
  std::string groom;
  std::string guides;
  std::string colliders;
  std::string track;
  std::string cameras;
  std::string output_dir = ".";

  HairParams hair;
  SimConfig sim;

  // simulate
  std::size_t frame_count = 60;
  double frame_dt = 1.0 / 30.0;

  // skin
  std::size_t skin_k = 10;
  double skin_epsilon = 1e-8;

  // fit-colors
  double lambda_consistency = 0.01;
  std::size_t fit_iterations = 600;
  double phase_fraction = 3.0 / 50.0;
  double learning_rate = 0.05;
  double final_learning_rate = 5e-4;
  std::size_t graph_k = 5;
  Vec3 background = Vec3::Zero();

  // metrics
  std::size_t components = 3;

  // make-synthetic / resample
  std::string style = "straight-bob";
  std::size_t strands = 700;
  std::size_t points = 16;
  std::uint64_t seed = 0;

  unsigned threads = 0;
};

/// All recognised keys, in file order.
const std::vector<std::string>& config_keys();

/// Sets one key from its text form. Unknown keys and unparsable values throw
/// ErrorCode::config naming the key.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const PipelineConfig& config, std::string_view key);

/// Parses `key = value` lines ('#' starts a comment) on top of `base`.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
/// Every key, one per line; parse_config(format_config(c)) reproduces c.
std::string format_config(const PipelineConfig& config);
PipelineConfig load_config(const std::string& path);

/// Checks numeric ranges and that every non-empty input path exists.
void validate(const PipelineConfig& config);

FitOptions fit_options(const PipelineConfig& config);

}  // namespace hairgs

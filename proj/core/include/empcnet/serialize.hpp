#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "empcnet/lti.hpp"
#include "empcnet/mpqp.hpp"

namespace empcnet {

struct EncodedNetwork;

std::string_view library_version();

// 64-bit FNV-1a, lowercase hex.
std::string fnv1a_hex(std::string_view data);

// Recorded in every artifact so runs can be traced to their inputs.
struct Provenance {
  std::string config_digest;
  std::uint64_t seed = 0;
};

// JSON documents; doubles are written in shortest round-trip form, so
// write -> read reproduces every value bit for bit. Schemas: docs/formats.md.
std::string solution_to_text(const ExplicitSolution& solution,
                             const std::optional<Provenance>& provenance = std::nullopt);
ExplicitSolution solution_from_text(const std::string& text);

// Digest of the solution's numeric content (provenance excluded).
std::string solution_digest(const ExplicitSolution& solution);

std::string network_to_text(const EncodedNetwork& network,
                            const std::optional<Provenance>& provenance = std::nullopt);
EncodedNetwork network_from_text(const std::string& text);

// Problem definition: {"A": [[...]], "B": ..., "x_min": [...], ...}.
// Missing bounds default to the infinite sentinel; missing Qf to Qx.
LtiProblem problem_from_text(const std::string& text);
std::string problem_to_text(const LtiProblem& problem);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace empcnet

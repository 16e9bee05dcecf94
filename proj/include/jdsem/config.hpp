#pragma once

// Line-based sectioned key/value configuration files.  The grammar is
// documented in docs/config-format.md.

#include "jdsem/presets.hpp"
#include "jdsem/sem_core.hpp"
#include "jdsem/simulator.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jdsem {

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct ConfigSection {
  std::string name;  // empty for the leading unnamed section
  std::size_t line = 0;
  std::vector<ConfigEntry> entries;

  [[nodiscard]] const ConfigEntry* find(std::string_view key) const;
  [[nodiscard]] const ConfigEntry& require(std::string_view key) const;
};

struct ConfigFile {
  std::string origin;  // file name, for messages
  std::vector<ConfigSection> sections;

  [[nodiscard]] const ConfigSection* section(std::string_view name) const;
};

[[nodiscard]] ConfigFile parse_config(std::string_view text, std::string origin = "<string>");
[[nodiscard]] ConfigFile load_config(const std::filesystem::path& path);

// Value grammar helpers; all throw ParseError naming the entry.
[[nodiscard]] double parse_real(const ConfigEntry& e);
[[nodiscard]] std::size_t parse_count(const ConfigEntry& e);
[[nodiscard]] bool parse_bool(const ConfigEntry& e);
[[nodiscard]] std::vector<double> parse_reals(const ConfigEntry& e);
[[nodiscard]] Matrix parse_matrix(const ConfigEntry& e);
// Cells are numbers or t<k> (1-based parameter reference).
[[nodiscard]] EntryMap parse_entry_map(const ConfigEntry& e, std::size_t rows, std::size_t cols, bool symmetric);

// Model spec file: dimensions, entry maps, optional `init`.
[[nodiscard]] Candidate parse_model(const ConfigFile& cfg);
[[nodiscard]] Candidate load_model(const std::filesystem::path& path);

// True-model file: constant matrices plus [xi] [delta] [eps] [zeta] sections.
[[nodiscard]] TrueModelSpec parse_true_model(const ConfigFile& cfg);
[[nodiscard]] TrueModelSpec load_true_model(const std::filesystem::path& path);

}  // namespace jdsem

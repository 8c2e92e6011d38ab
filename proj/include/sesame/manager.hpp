/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <compare>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sesame/constructor.hpp"

namespace sesame {

/// One (category, name, value) triple. Categories are "hardware",
/// "software" and "interaction".
struct ConfigEntry {
  std::string category;
  std::string name;
  std::string value;

  auto operator<=>(const ConfigEntry&) const = default;
};

/// Canonical, hashable system configuration. Entries are sorted, so keys
/// built from the same triples in any order compare equal.
class ConfigurationKey {
 public:
  ConfigurationKey() = default;
  explicit ConfigurationKey(std::vector<ConfigEntry> entries);

  const std::vector<ConfigEntry>& entries() const noexcept { return entries_; }
  /// Copy with (category, name) set to `value`, added if absent.
  ConfigurationKey with(const std::string& category, const std::string& name, const std::string& value) const;
  std::string to_string() const;

  bool operator==(const ConfigurationKey&) const = default;

 private:
  std::vector<ConfigEntry> entries_;
};

struct ConfigurationKeyHash {
  std::size_t operator()(const ConfigurationKey& k) const noexcept;
};

/// One monitored window, stamped with the window start.
struct MonitorRecord {
  double t_s = 0.0;
  double error = 0.0;
  bool skipped = false;

  bool operator==(const MonitorRecord&) const = default;
};

/// Configuration-keyed model store plus the active model's error history.
class ModelTable {
 public:
  double threshold = 0.10;
  double window_s = 100.0;
  std::size_t history_capacity = 4096;

  /// Stored model for `key` or nullptr (cold start). Either way `key`
  /// becomes the active key.
  const EnergyModel* lookup_or_create(const ConfigurationKey& key);

  /// Store `model` under `key`, replacing only that key's entry.
  void install(const ConfigurationKey& key, EnergyModel model);

  const EnergyModel* find(const ConfigurationKey& key) const;
  const EnergyModel* active_model() const;
  const std::optional<ConfigurationKey>& active_key() const noexcept { return active_; }
  void clear_active() { active_.reset(); }

  std::size_t size() const noexcept { return models_.size(); }
  /// Entries ordered by key text, for deterministic output.
  std::vector<std::pair<ConfigurationKey, const EnergyModel*>> sorted_entries() const;

  const std::deque<MonitorRecord>& history() const noexcept { return history_; }
  void record(const MonitorRecord& r);

  bool operator==(const ModelTable& o) const;

 private:
  std::unordered_map<ConfigurationKey, EnergyModel, ConfigurationKeyHash> models_;
  std::optional<ConfigurationKey> active_;
  std::deque<MonitorRecord> history_;
};

struct MonitorResult {
  std::vector<MonitorRecord> windows;
  std::size_t skipped = 0;
};

/// Compare the stretched active model against the interface, one window at a
/// time: |model energy - interface energy| / interface energy. `windows`
/// holds predictor rows at the table's window length. Windows whose interface
/// energy is not positive are skipped and counted.
MonitorResult monitor(ModelTable& table, const DesignMatrix& windows, const ReadingStream& readings);

/// Error of one window; nullopt when the interface energy is not positive.
std::optional<double> window_error(double model_energy_j, double interface_energy_j);

struct RebuildDecision {
  bool rebuilt = false;
  bool below_target = false;
};

/// Rebuild when `latest_error` is strictly above the threshold: construct a
/// model from `fresh_data()` (stretched rows over the full initial predictor
/// set) and install it under the active key.
RebuildDecision maybe_rebuild(ModelTable& table, double latest_error,
                              const std::function<DesignMatrix()>& fresh_data, double accuracy_target,
                              const FitOptions& opts = {});

/// Append-only decision log lines `t_s,window_error,threshold,action`.
class DecisionLog {
 public:
  explicit DecisionLog(std::ostream& os, bool write_header = true);
  void append(double t_s, std::optional<double> window_error, double threshold, const std::string& action);

 private:
  std::ostream* os_;
};

// Persistence. Both the table file and model documents are JSON text.
std::string model_to_json(const EnergyModel& model);
EnergyModel model_from_json(const std::string& text);

std::string table_to_json(const ModelTable& table);
ModelTable table_from_json(const std::string& text);

void persist(const ModelTable& table, const std::filesystem::path& path);
ModelTable load(const std::filesystem::path& path);

}  // namespace sesame

/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "sesame/manager.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "sesame/csv.hpp"

namespace sesame {

using nlohmann::json;

namespace {

const std::vector<std::string> kCategories = {"hardware", "software", "interaction"};

std::size_t line_of(const std::string& text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

/// Walks a parsed document while tracking the field path for error messages.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  Reader at(const std::string& key) const {
    if (!j_.is_object()) fail("expected an object");
    const auto it = j_.find(key);
    if (it == j_.end()) throw ParseError("missing field '" + child(key) + "'", 0, child(key));
    return Reader(*it, child(key));
  }
  Reader at(std::size_t i) const {
    if (!j_.is_array() || i >= j_.size()) fail("expected an array with index " + std::to_string(i));
    return Reader(j_[i], path_ + "[" + std::to_string(i) + "]");
  }
  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }
  bool is_null() const { return j_.is_null(); }
  std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }
  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }
  std::string text() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) fail("expected a boolean");
    return j_.get<bool>();
  }
  std::vector<std::string> strings() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).text());
    return out;
  }
  Eigen::VectorXd vector() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) v(static_cast<Eigen::Index>(i)) = at(i).number();
    return v;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("field '" + path_ + "': " + what, 0, path_);
  }
  const std::string& path() const { return path_; }

 private:
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
};

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("line " + std::to_string(line) + ": " + e.what(), line, "document");
  }
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json model_json(const EnergyModel& m) {
  json j;
  j["predictor_ids"] = m.predictor_ids;
  j["beta_w"] = vec_json(m.beta);
  j["training_interval_s"] = m.training_interval_s;
  j["fit"] = to_string(m.method);
  j["training_error"] = m.training_error;
  j["weighted_ids"] = m.weighted_ids;
  j["below_target"] = m.below_target;
  if (m.basis) {
    const auto& b = *m.basis;
    json basis;
    basis["ids"] = b.ids;
    basis["l"] = b.l();
    basis["n"] = b.n();
    json rows = json::array();
    for (Eigen::Index r = 0; r < b.rows.rows(); ++r) {
      for (Eigen::Index c = 0; c < b.rows.cols(); ++c) rows.push_back(b.rows(r, c));
    }
    basis["rows"] = rows;
    basis["singular_values"] = vec_json(b.singular_values);
    basis["means"] = vec_json(b.means);
    basis["scales"] = vec_json(b.scales);
    j["basis"] = basis;
  } else {
    j["basis"] = nullptr;
  }
  return j;
}

EnergyModel model_from(const Reader& r) {
  EnergyModel m;
  m.predictor_ids = r.at("predictor_ids").strings();
  m.beta = r.at("beta_w").vector();
  m.training_interval_s = r.at("training_interval_s").number();
  try {
    m.method = fit_method_from_string(r.at("fit").text());
  } catch (const ConfigError& e) {
    r.at("fit").fail(e.what());
  }
  m.training_error = r.at("training_error").number();
  m.weighted_ids = r.at("weighted_ids").strings();
  m.below_target = r.at("below_target").boolean();
  const Reader b = r.at("basis");
  if (!b.is_null()) {
    PCABasis basis;
    basis.ids = b.at("ids").strings();
    const auto l = static_cast<Eigen::Index>(b.at("l").number());
    const auto n = static_cast<Eigen::Index>(b.at("n").number());
    const Reader rows = b.at("rows");
    if (rows.size() != static_cast<std::size_t>(l * n)) rows.fail("expected l * n entries");
    basis.rows.resize(l, n);
    for (Eigen::Index i = 0; i < l; ++i) {
      for (Eigen::Index c = 0; c < n; ++c) basis.rows(i, c) = rows.at(static_cast<std::size_t>(i * n + c)).number();
    }
    basis.singular_values = b.at("singular_values").vector();
    basis.means = b.at("means").vector();
    basis.scales = b.at("scales").vector();
    if (basis.means.size() != n || basis.scales.size() != n) b.fail("means/scales must have n entries");
    m.basis = std::move(basis);
  }
  const auto expected = 1 + (m.basis ? m.basis->l() : m.predictor_ids.size());
  if (static_cast<std::size_t>(m.beta.size()) != expected) r.at("beta_w").fail("wrong coefficient count");
  return m;
}

json key_json(const ConfigurationKey& k) {
  json a = json::array();
  for (const auto& e : k.entries()) a.push_back({e.category, e.name, e.value});
  return a;
}

ConfigurationKey key_from(const Reader& r) {
  std::vector<ConfigEntry> entries;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Reader t = r.at(i);
    if (t.size() != 3) t.fail("expected [category, name, value]");
    entries.push_back({t.at(0).text(), t.at(1).text(), t.at(2).text()});
  }
  try {
    return ConfigurationKey(std::move(entries));
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------

ConfigurationKey::ConfigurationKey(std::vector<ConfigEntry> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (std::find(kCategories.begin(), kCategories.end(), e.category) == kCategories.end()) {
      throw ConfigError("unknown configuration category '" + e.category + "'");
    }
  }
  std::sort(entries_.begin(), entries_.end());
  entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].category == entries_[i - 1].category && entries_[i].name == entries_[i - 1].name) {
      throw ConfigError("configuration setting '" + entries_[i].category + ":" + entries_[i].name +
                        "' has two values");
    }
  }
}

ConfigurationKey ConfigurationKey::with(const std::string& category, const std::string& name,
                                        const std::string& value) const {
  auto entries = entries_;
  std::erase_if(entries, [&](const ConfigEntry& e) { return e.category == category && e.name == name; });
  entries.push_back({category, name, value});
  return ConfigurationKey(std::move(entries));
}

std::string ConfigurationKey::to_string() const {
  std::string out;
  for (const auto& e : entries_) {
    if (!out.empty()) out += ';';
    out += e.category + ':' + e.name + '=' + e.value;
  }
  return out;
}

std::size_t ConfigurationKeyHash::operator()(const ConfigurationKey& k) const noexcept {
  return std::hash<std::string>{}(k.to_string());
}

// ---------------------------------------------------------------------------

const EnergyModel* ModelTable::lookup_or_create(const ConfigurationKey& key) {
  active_ = key;
  return find(key);
}

void ModelTable::install(const ConfigurationKey& key, EnergyModel model) {
  models_.insert_or_assign(key, std::move(model));
}

const EnergyModel* ModelTable::find(const ConfigurationKey& key) const {
  const auto it = models_.find(key);
  return it == models_.end() ? nullptr : &it->second;
}

const EnergyModel* ModelTable::active_model() const { return active_ ? find(*active_) : nullptr; }

std::vector<std::pair<ConfigurationKey, const EnergyModel*>> ModelTable::sorted_entries() const {
  std::vector<std::pair<ConfigurationKey, const EnergyModel*>> out;
  for (const auto& [k, m] : models_) out.emplace_back(k, &m);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first.to_string() < b.first.to_string(); });
  return out;
}

void ModelTable::record(const MonitorRecord& r) {
  history_.push_back(r);
  while (history_.size() > history_capacity) history_.pop_front();
}

bool ModelTable::operator==(const ModelTable& o) const {
  return threshold == o.threshold && window_s == o.window_s && history_capacity == o.history_capacity &&
         models_ == o.models_ && active_ == o.active_ && history_ == o.history_;
}

// ---------------------------------------------------------------------------

std::optional<double> window_error(double model_energy_j, double interface_energy_j) {
  if (!(interface_energy_j > 0.0)) return std::nullopt;
  return std::abs(model_energy_j - interface_energy_j) / interface_energy_j;
}

MonitorResult monitor(ModelTable& table, const DesignMatrix& windows, const ReadingStream& readings) {
  const EnergyModel* model = table.active_model();
  if (!model) throw ArgumentError("monitoring needs an active model");
  if (std::abs(windows.interval_s - table.window_s) > 1e-9 * table.window_s) {
    throw AlignmentError("monitor rows must be aggregated at the table's window length");
  }
  const Eigen::VectorXd predicted = predict_energy(*model, windows);
  const Eigen::VectorXd observed =
      aggregate_response(readings, table.window_s, windows.t0_s, static_cast<double>(windows.rows()) * table.window_s);
  MonitorResult out;
  for (Eigen::Index i = 0; i < predicted.size(); ++i) {
    MonitorRecord rec;
    rec.t_s = windows.t_start(static_cast<std::size_t>(i));
    if (const auto e = window_error(predicted(i), observed(i))) {
      rec.error = *e;
    } else {
      rec.skipped = true;
      ++out.skipped;
    }
    table.record(rec);
    out.windows.push_back(rec);
  }
  return out;
}

RebuildDecision maybe_rebuild(ModelTable& table, double latest_error, const std::function<DesignMatrix()>& fresh_data,
                              double accuracy_target, const FitOptions& opts) {
  RebuildDecision d;
  if (!(latest_error > table.threshold)) return d;
  if (!table.active_key()) throw ArgumentError("rebuild needs an active configuration key");
  EnergyModel model = iterate_construction(fresh_data(), accuracy_target, opts);
  d.rebuilt = true;
  d.below_target = model.below_target;
  table.install(*table.active_key(), std::move(model));
  return d;
}

DecisionLog::DecisionLog(std::ostream& os, bool write_header) : os_(&os) {
  if (write_header) *os_ << "t_s,window_error,threshold,action\n";
}

void DecisionLog::append(double t_s, std::optional<double> err, double threshold, const std::string& action) {
  *os_ << format_double(t_s) << ',' << (err ? format_double(*err) : std::string("")) << ','
       << format_double(threshold) << ',' << action << '\n';
}

// ---------------------------------------------------------------------------

std::string model_to_json(const EnergyModel& model) { return model_json(model).dump(); }

EnergyModel model_from_json(const std::string& text) { return model_from(Reader(parse_document(text), "")); }

std::string table_to_json(const ModelTable& table) {
  json j;
  j["format"] = "sesame-model-table";
  j["version"] = 1;
  j["threshold"] = table.threshold;
  j["window_s"] = table.window_s;
  j["history_capacity"] = table.history_capacity;
  j["active"] = table.active_key() ? key_json(*table.active_key()) : json(nullptr);
  json entries = json::array();
  for (const auto& [key, model] : table.sorted_entries()) entries.push_back({{"key", key_json(key)}, {"model", model_json(*model)}});
  j["entries"] = entries;
  json hist = json::array();
  for (const auto& r : table.history()) hist.push_back({r.t_s, r.error, r.skipped});
  j["history"] = hist;
  return j.dump(1);
}

ModelTable table_from_json(const std::string& text) {
  const json doc = parse_document(text);
  const Reader r(doc, "");
  if (r.at("format").text() != "sesame-model-table") r.at("format").fail("not a model table document");
  ModelTable t;
  t.threshold = r.at("threshold").number();
  t.window_s = r.at("window_s").number();
  t.history_capacity = static_cast<std::size_t>(r.at("history_capacity").number());
  const Reader entries = r.at("entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Reader e = entries.at(i);
    t.install(key_from(e.at("key")), model_from(e.at("model")));
  }
  const Reader active = r.at("active");
  if (!active.is_null()) t.lookup_or_create(key_from(active));
  const Reader hist = r.at("history");
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const Reader h = hist.at(i);
    t.record({h.at(0).number(), h.at(1).number(), h.at(2).boolean()});
  }
  return t;
}

void persist(const ModelTable& table, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os << table_to_json(table) << '\n';
  if (!os) throw Error("failed writing '" + path.string() + "'");
}

ModelTable load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return table_from_json(ss.str());
}

}  // namespace sesame

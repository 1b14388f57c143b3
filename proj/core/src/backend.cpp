#include "fleetloop/backend.hpp"

#include <Eigen/Dense>

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include <json.hpp>
#endif

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fleetloop/csv.hpp"

namespace fleetloop {

using json = nlohmann::json;

namespace {

json record_to_json(const SituationRecord& r) {
  return json{{"a_lat", r.features.a_lat},
              {"a_lon", r.features.a_lon},
              {"captured_at", r.features.captured_at},
              {"condition", to_string(r.condition)},
              {"d_offset", r.features.d_offset},
              {"desired_delta_d", r.desired_delta_d},
              {"e_x", r.e_x},
              {"e_y", r.e_y},
              {"horizon", r.horizon},
              {"issued_at", r.issued_at},
              {"predicted_delta_d", r.predicted_delta_d},
              {"received_at", r.received_at},
              {"source_vehicle", r.source_vehicle},
              {"target_id", r.target_id},
              {"v_lat", r.features.v_lat},
              {"v_lon", r.features.v_lon}};
}

SituationRecord record_from_json(const json& j) {
  SituationRecord r;
  r.features.v_lon = j.at("v_lon").get<double>();
  r.features.v_lat = j.at("v_lat").get<double>();
  r.features.a_lon = j.at("a_lon").get<double>();
  r.features.a_lat = j.at("a_lat").get<double>();
  r.features.d_offset = j.at("d_offset").get<double>();
  r.features.captured_at = j.at("captured_at").get<double>();
  const auto key = parse_condition_key(j.at("condition").get<std::string>());
  if (!key) throw std::runtime_error("bad condition in situation database");
  r.features.condition = *key;
  r.condition = *key;
  r.desired_delta_d = j.at("desired_delta_d").get<double>();
  r.predicted_delta_d = j.at("predicted_delta_d").get<double>();
  r.horizon = j.at("horizon").get<double>();
  r.e_x = j.at("e_x").get<double>();
  r.e_y = j.at("e_y").get<double>();
  r.received_at = j.at("received_at").get<double>();
  r.source_vehicle = j.at("source_vehicle").get<std::string>();
  r.target_id = j.at("target_id").get<std::string>();
  r.issued_at = j.at("issued_at").get<double>();
  return r;
}

double model_abs_error(const SituationRecord& rec, const ParameterSet& set) {
  const auto reg = lateral_regressors(rec.features, rec.horizon);
  double pred = 0.0;
  for (std::size_t i = 0; i < reg.size(); ++i) pred += set.weights[i] * reg[i];
  return std::fabs(rec.desired_delta_d - pred);
}

std::string condition_label(const std::optional<ConditionKey>& key) {
  return key ? to_string(*key) : std::string("BASIC");
}

}  // namespace

SituationDatabase::SituationDatabase(std::filesystem::path file)
    : file_(std::move(file)) {
  if (std::filesystem::exists(*file_)) {
    std::ifstream in(*file_);
    if (!in) {
      throw std::runtime_error("cannot open situation database: " +
                               file_->string());
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        auto rec = record_from_json(json::parse(line));
        seen_.emplace(rec.source_vehicle, rec.target_id, rec.issued_at);
        records_.push_back(std::move(rec));
      } catch (const std::exception& e) {
        throw std::runtime_error("situation database " + file_->string() +
                                 " line " + std::to_string(lineno) +
                                 " is corrupt: " + e.what());
      }
    }
  } else if (file_->has_parent_path()) {
    std::filesystem::create_directories(file_->parent_path());
  }
}

std::optional<SituationRecord> SituationDatabase::store_measurement(
    const MeasurementPackage& pkg) {
  if (!seen_.emplace(pkg.vehicle_id, pkg.target_id, pkg.issued_at).second) {
    return std::nullopt;
  }
  SituationRecord rec;
  rec.features = pkg.features;
  // The signed lateral residual is carried via the actual/predicted pair.
  rec.desired_delta_d =
      pkg.displacement.delta_d + (pkg.actual.d - pkg.predicted.d);
  rec.predicted_delta_d = pkg.displacement.delta_d;
  rec.horizon = pkg.displacement.horizon;
  rec.condition = pkg.features.condition;
  rec.e_x = pkg.e_x;
  rec.e_y = pkg.e_y;
  rec.received_at = pkg.observed_at;
  rec.source_vehicle = pkg.vehicle_id;
  rec.target_id = pkg.target_id;
  rec.issued_at = pkg.issued_at;
  if (file_) {
    try {
      append_to_file(rec);
    } catch (...) {
      // Not stored in memory either; the sender may retry.
      seen_.erase({pkg.vehicle_id, pkg.target_id, pkg.issued_at});
      throw;
    }
  }
  records_.push_back(rec);
  return rec;
}

void SituationDatabase::append_to_file(const SituationRecord& rec) {
  std::ofstream out(*file_, std::ios::app);
  if (!out) {
    throw std::runtime_error("cannot append to situation database: " +
                             file_->string());
  }
  out << record_to_json(rec).dump() << '\n';
  out.flush();
  if (!out) {
    throw std::runtime_error("write failed for situation database: " +
                             file_->string());
  }
}

std::vector<const SituationRecord*> SituationDatabase::records_for(
    const ConditionKey& key) const {
  std::vector<const SituationRecord*> out;
  for (const auto& r : records_) {
    if (r.condition == key) out.push_back(&r);
  }
  return out;
}

std::vector<ConditionKey> SituationDatabase::condition_keys_with_records()
    const {
  std::vector<ConditionKey> out;
  for (const auto& key : all_condition_keys()) {
    for (const auto& r : records_) {
      if (r.condition == key) {
        out.push_back(key);
        break;
      }
    }
  }
  return out;
}

FitResult fit_parameters(const SituationDatabase& db, const ConditionKey& key,
                         std::int64_t next_version, std::size_t min_records) {
  const auto recs = db.records_for(key);
  if (recs.size() < min_records) {
    throw InsufficientData("not enough data for " + to_string(key) + ": " +
                           std::to_string(recs.size()) + " of " +
                           std::to_string(min_records) + " records");
  }
  Eigen::MatrixXd design(static_cast<Eigen::Index>(recs.size()), 4);
  Eigen::VectorXd target(static_cast<Eigen::Index>(recs.size()));
  double latest = 0.0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto reg = lateral_regressors(recs[i]->features, recs[i]->horizon);
    for (int c = 0; c < 4; ++c) {
      design(static_cast<Eigen::Index>(i), c) = reg[static_cast<std::size_t>(c)];
    }
    target(static_cast<Eigen::Index>(i)) = recs[i]->desired_delta_d;
    latest = std::max(latest, recs[i]->received_at);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  const Eigen::VectorXd solution = cod.solve(target);

  FitResult fit;
  fit.candidate.weights = {solution(0), solution(1), solution(2), solution(3)};
  fit.candidate.version = next_version;
  fit.candidate.condition = key;
  fit.candidate.released_at = latest;
  fit.rank = static_cast<int>(cod.rank());
  fit.rank_deficient = fit.rank < 4;
  fit.record_count = recs.size();
  return fit;
}

ParameterStore::ParameterStore(std::filesystem::path snapshot_file,
                               std::filesystem::path history_file)
    : snapshot_file_(std::move(snapshot_file)),
      history_file_(std::move(history_file)) {
  for (const auto& f : {*snapshot_file_, *history_file_}) {
    if (f.has_parent_path()) std::filesystem::create_directories(f.parent_path());
  }
  if (!std::filesystem::exists(*snapshot_file_)) return;
  std::ifstream in(*snapshot_file_);
  if (!in) {
    throw std::runtime_error("cannot open parameter store: " +
                             snapshot_file_->string());
  }
  json j;
  try {
    in >> j;
    next_version_ = j.at("next_version").get<std::int64_t>();
    for (const auto& item : j.at("released")) {
      ParameterSet set;
      item.at("weights").get_to(set.weights);
      set.version = item.at("version").get<std::int64_t>();
      set.released_at = item.at("released_at").get<double>();
      const auto key =
          parse_condition_key(item.at("condition").get<std::string>());
      if (!key) throw std::runtime_error("bad condition key");
      set.condition = *key;
      released_[*key] = set;
    }
  } catch (const std::exception& e) {
    throw std::runtime_error("parameter store " + snapshot_file_->string() +
                             " is corrupt: " + e.what());
  }
}

ParameterSet ParameterStore::lookup(const ConditionKey& key) const {
  if (const auto it = released_.find(key); it != released_.end()) {
    return it->second;
  }
  return basic_parameters();
}

std::optional<ParameterSet> ParameterStore::released(
    const ConditionKey& key) const {
  if (const auto it = released_.find(key); it != released_.end()) {
    return it->second;
  }
  return std::nullopt;
}

void ParameterStore::install(const ParameterSet& set,
                             const GateReport& report) {
  if (!set.condition) {
    throw std::invalid_argument("cannot install a set without a condition");
  }
  if (set.version <= 0) {
    throw std::invalid_argument("released versions start at 1");
  }
  released_[*set.condition] = set;
  next_version_ = std::max(next_version_, set.version + 1);
  history_.push_back(report);
  if (snapshot_file_) persist_snapshot();
  if (history_file_) append_history(report);
}

void ParameterStore::record_rejection(const GateReport& report) {
  next_version_ = std::max(next_version_, report.candidate_version + 1);
  history_.push_back(report);
  if (history_file_) append_history(report);
}

void ParameterStore::persist_snapshot() const {
  json released = json::array();
  for (const auto& [key, set] : released_) {
    released.push_back(json{{"condition", to_string(key)},
                            {"released_at", set.released_at},
                            {"version", set.version},
                            {"weights", set.weights}});
  }
  const json j{{"next_version", next_version_}, {"released", released}};
  const auto tmp = snapshot_file_->string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write parameter store: " + tmp);
    }
    out << j.dump(2) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, *snapshot_file_);
}

void ParameterStore::append_history(const GateReport& report) {
  std::ofstream out(*history_file_, std::ios::app);
  if (!out) {
    throw std::runtime_error("cannot append to release history: " +
                             history_file_->string());
  }
  std::ostringstream line;
  line << "v" << report.candidate_version << ' '
       << condition_label(report.condition) << ' '
       << (report.accepted ? "accepted" : "rejected") << " w=["
       << format_double(report.weights[0]) << ','
       << format_double(report.weights[1]) << ','
       << format_double(report.weights[2]) << ','
       << format_double(report.weights[3]) << ']'
       << " released_at=" << format_double(report.released_at) << " buckets:";
  for (const auto& b : report.buckets) {
    line << ' ' << to_string(b.key) << " n=" << b.records << ' '
         << format_double(b.mean_before) << "->"
         << format_double(b.mean_after) << ';';
  }
  if (!report.reason.empty()) line << " reason: " << report.reason;
  out << line.str() << '\n';
}

GateReport release_gate(const ParameterSet& candidate,
                        const SituationDatabase& db, ParameterStore& store) {
  GateReport report;
  report.candidate_version = candidate.version;
  report.condition = candidate.condition;
  report.weights = candidate.weights;
  report.released_at = candidate.released_at;

  bool own_bucket_seen = false;
  bool own_bucket_improved = false;
  bool regression = false;
  std::string regressed;

  for (const auto& key : db.condition_keys_with_records()) {
    const auto recs = db.records_for(key);
    const ParameterSet before = store.lookup(key);
    const bool is_own = candidate.condition && key == *candidate.condition;
    const ParameterSet& after = is_own ? candidate : before;
    double sum_before = 0.0;
    double sum_after = 0.0;
    for (const auto* rec : recs) {
      sum_before += model_abs_error(*rec, before);
      sum_after += model_abs_error(*rec, after);
    }
    const double n = static_cast<double>(recs.size());
    const GateBucketReport bucket{key, recs.size(), sum_before / n,
                                  sum_after / n};
    report.buckets.push_back(bucket);
    if (bucket.mean_after > bucket.mean_before + kGateEpsilon) {
      regression = true;
      regressed = to_string(key);
    }
    if (is_own) {
      own_bucket_seen = true;
      own_bucket_improved = bucket.mean_after < bucket.mean_before;
    }
  }

  if (regression) {
    report.reason = "bucket " + regressed + " regressed beyond epsilon";
  } else if (!own_bucket_seen) {
    report.reason = "no stored records for " + condition_label(candidate.condition);
  } else if (!own_bucket_improved) {
    report.reason = "own bucket did not strictly improve";
  }
  report.accepted = !regression && own_bucket_seen && own_bucket_improved;

  if (report.accepted) {
    store.install(candidate, report);
  } else {
    store.record_rejection(report);
  }
  return report;
}

BackendCore::BackendCore(const BackendPaths& paths)
    : db_(paths.db_file), store_(paths.store_file, paths.history_file) {}

std::optional<SituationRecord> BackendCore::store_measurement(
    const MeasurementPackage& pkg) {
  std::lock_guard lock(mu_);
  return db_.store_measurement(pkg);
}

ParameterSet BackendCore::lookup_parameters(const ConditionKey& key) const {
  std::lock_guard lock(mu_);
  return store_.lookup(key);
}

std::size_t BackendCore::record_count() const {
  std::lock_guard lock(mu_);
  return db_.size();
}

TrainOutcome BackendCore::train_one(const ConditionKey& key) {
  std::lock_guard lock(mu_);
  TrainOutcome outcome{key, std::nullopt, ""};
  try {
    const auto fit = fit_parameters(db_, key, store_.next_version());
    outcome.report = release_gate(fit.candidate, db_, store_);
  } catch (const InsufficientData& e) {
    outcome.error = e.what();
  }
  return outcome;
}

std::vector<TrainOutcome> BackendCore::train_all() {
  std::vector<TrainOutcome> out;
  for (const auto& key : all_condition_keys()) {
    out.push_back(train_one(key));
  }
  return out;
}

}  // namespace fleetloop

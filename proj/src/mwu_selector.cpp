#include "hedgefair/mwu_selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace hedgefair {

PortfolioState::PortfolioState(const std::vector<std::string>& function_ids, double eta,
                               double tau)
    : eta_(eta), tau_(tau) {
  if (function_ids.empty()) throw ValidationError("portfolio needs at least one function");
  if (!(eta > 0.0 && eta <= 0.5)) {
    throw ValidationError("eta must lie in (0, 1/2], got " + std::to_string(eta));
  }
  if (!(tau >= 0.0)) throw ValidationError("tau must be non-negative");
  std::set<std::string> seen;
  for (const auto& id : function_ids) {
    if (!seen.insert(id).second) throw ValidationError("duplicate function id '" + id + "'");
    entries_.push_back({id, 1.0});
    function_losses_[id] = 0.0;
  }
}

bool PortfolioState::contains(const std::string& id) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const PortfolioEntry& e) { return e.function_id == id; });
}

double PortfolioState::weight(const std::string& id) const {
  for (const auto& e : entries_) {
    if (e.function_id == id) return e.weight;
  }
  throw ValidationError("function '" + id + "' is not in the portfolio");
}

std::vector<double> PortfolioState::distribution() const {
  if (entries_.empty()) throw ValidationError("distribution of an empty portfolio");
  double total = 0.0;
  for (const auto& e : entries_) total += e.weight;
  std::vector<double> p;
  p.reserve(entries_.size());
  for (const auto& e : entries_) p.push_back(e.weight / total);
  return p;
}

std::size_t PortfolioState::sample_index(double u) const {
  const auto p = distribution();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    last_positive = k;
    cumulative += p[k];
    if (u < cumulative) return k;
  }
  return last_positive;  // u landed in the rounding slack above the final sum
}

void PortfolioState::apply_losses(std::span<const double> losses, double framework_loss) {
  if (losses.size() != entries_.size()) {
    throw ValidationError("one loss per portfolio entry is required");
  }
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    entries_[k].weight *= 1.0 - eta_ * losses[k];
    function_losses_[entries_[k].function_id] += losses[k];
  }
  framework_loss_ += framework_loss;
  ++updates_;
  const double total = std::accumulate(entries_.begin(), entries_.end(), 0.0,
                                       [](double s, const PortfolioEntry& e) { return s + e.weight; });
  if (total < 1e-6 || total > 1e6) normalize();
}

void PortfolioState::normalize() {
  double total = 0.0;
  for (const auto& e : entries_) total += e.weight;
  if (total <= 0.0) return;
  const double c = static_cast<double>(entries_.size()) / total;
  for (auto& e : entries_) e.weight *= c;
}

void PortfolioState::scale(double c) {
  if (!(c > 0.0)) throw ValidationError("scale factor must be positive");
  for (auto& e : entries_) e.weight *= c;
}

std::vector<std::string> PortfolioState::remove(const std::vector<std::string>& ids) {
  std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<std::size_t> doomed;
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (wanted.contains(entries_[k].function_id)) doomed.push_back(k);
  }
  if (doomed.empty()) return {};
  std::stable_sort(doomed.begin(), doomed.end(), [&](std::size_t a, std::size_t b) {
    return entries_[a].weight < entries_[b].weight;
  });
  if (doomed.size() == entries_.size()) doomed.pop_back();  // keep the heaviest
  std::vector<std::string> removed;
  std::set<std::size_t> gone(doomed.begin(), doomed.end());
  for (std::size_t k : doomed) removed.push_back(entries_[k].function_id);
  std::vector<PortfolioEntry> kept;
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (!gone.contains(k)) kept.push_back(entries_[k]);
  }
  entries_ = std::move(kept);
  return removed;
}

std::vector<std::string> PortfolioState::prune() {
  std::vector<std::string> low;
  for (const auto& e : entries_) {
    if (e.weight < tau_) low.push_back(e.function_id);
  }
  return remove(low);
}

void PortfolioState::insert(const std::string& id, double weight) {
  if (contains(id)) throw ValidationError("function '" + id + "' is already in the portfolio");
  if (!(weight > 0.0)) throw ValidationError("weights must be positive");
  entries_.push_back({id, weight});
  function_losses_.try_emplace(id, 0.0);
}

void PortfolioState::reinsert(const std::string& id) {
  double w = 1.0;
  if (!entries_.empty()) {
    std::vector<double> ws;
    for (const auto& e : entries_) ws.push_back(e.weight);
    std::sort(ws.begin(), ws.end());
    const std::size_t n = ws.size();
    w = n % 2 == 1 ? ws[n / 2] : 0.5 * (ws[n / 2 - 1] + ws[n / 2]);
  }
  insert(id, w);
}

std::string PortfolioState::best_function() const {
  if (function_losses_.empty()) throw ValidationError("no functions tracked");
  // std::map iterates in lexicographic order, so strict < keeps the first tie.
  auto best = function_losses_.begin();
  for (auto it = function_losses_.begin(); it != function_losses_.end(); ++it) {
    if (it->second < best->second) best = it;
  }
  return best->first;
}

double PortfolioState::regret() const {
  return framework_loss_ - function_losses_.at(best_function());
}

PortfolioState init_portfolio(const std::vector<DecisionFunction>& functions, double eta,
                              double tau) {
  std::vector<std::string> ids;
  for (const auto& f : functions) ids.push_back(f.id());
  return PortfolioState(ids, eta, tau);
}

std::optional<Label> SelectionRecord::label_of(const std::string& id) const {
  for (std::size_t k = 0; k < function_ids.size(); ++k) {
    if (function_ids[k] == id) return labels[k];
  }
  return std::nullopt;
}

SelectionRecord select(const PortfolioState& state, const FunctionTable& functions,
                       const Instance& inst, RngStream& rng) {
  SelectionRecord rec;
  rec.instance_id = inst.id;
  rec.probabilities = state.distribution();
  for (const auto& e : state.entries()) {
    auto it = functions.find(e.function_id);
    if (it == functions.end()) {
      throw ValidationError("no decision function registered for '" + e.function_id + "'");
    }
    rec.function_ids.push_back(e.function_id);
    rec.labels.push_back(it->second.evaluate(inst));
  }
  rec.draw = rng.uniform();
  const std::size_t k = state.sample_index(rec.draw);
  rec.chosen = rec.function_ids[k];
  rec.emitted = rec.labels[k];
  return rec;
}

void update_weights(PortfolioState& state, const SelectionRecord& record,
                    const GroundTruthEntry& entry) {
  if (entry.instance_id != record.instance_id) {
    throw ValidationError("ground truth for instance " + std::to_string(entry.instance_id) +
                          " applied to the decision on instance " +
                          std::to_string(record.instance_id));
  }
  std::vector<double> losses;
  losses.reserve(state.size());
  for (const auto& e : state.entries()) {
    auto l = record.label_of(e.function_id);
    losses.push_back(l ? loss(entry, *l) : 0.0);
  }
  state.apply_losses(losses, loss(entry, record.emitted));
}

}  // namespace hedgefair

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "hedgefair/decision_function.hpp"
#include "hedgefair/rng.hpp"

namespace hedgefair {

struct PortfolioEntry {
  std::string function_id;
  double weight = 1.0;
};

/// Weights of the function portfolio under the multiplicative weights update
/// w_f <- w_f * (1 - eta * loss_f), with 0 < eta <= 1/2 and losses in [-1, 1].
class PortfolioState {
 public:
  PortfolioState(const std::vector<std::string>& function_ids, double eta, double tau);

  const std::vector<PortfolioEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& id) const;
  double weight(const std::string& id) const;
  double eta() const { return eta_; }
  double tau() const { return tau_; }

  /// p_f = w_f / sum w, in entry order.
  std::vector<double> distribution() const;

  /// Index drawn by inverting the cumulative distribution at u in [0, 1).
  std::size_t sample_index(double u) const;

  /// Multiplies every weight by (1 - eta * losses[k]) and accrues losses.
  /// `framework_loss` is the loss of the emitted decision.
  void apply_losses(std::span<const double> losses, double framework_loss);

  /// Rescales weights so that they sum to the portfolio size.
  void normalize();

  /// Removes and returns every function with w_f < tau, lowest weight first.
  /// The highest-weight function is never removed.
  std::vector<std::string> prune();

  /// Removes the listed functions with the same keep-one rule as prune().
  std::vector<std::string> remove(const std::vector<std::string>& ids);

  /// Adds a function back at the median of the current weights.
  void reinsert(const std::string& id);
  void insert(const std::string& id, double weight);

  /// Scales every weight by c > 0; the distribution is unchanged.
  void scale(double c);

  double framework_loss() const { return framework_loss_; }
  /// Cumulative loss per function, including functions no longer in the portfolio.
  const std::map<std::string, double>& function_losses() const { return function_losses_; }
  std::size_t updates() const { return updates_; }

  /// Framework loss minus the smallest cumulative function loss.
  double regret() const;
  /// Lowest cumulative loss, ties broken by lexicographic id.
  std::string best_function() const;

 private:
  std::vector<PortfolioEntry> entries_;
  double eta_;
  double tau_;
  double framework_loss_ = 0.0;
  std::map<std::string, double> function_losses_;
  std::size_t updates_ = 0;
};

PortfolioState init_portfolio(const std::vector<DecisionFunction>& functions, double eta,
                              double tau);

struct SelectionRecord {
  std::uint64_t instance_id = 0;
  std::string chosen;
  Label emitted = Label::reject;
  double draw = 0.0;  // the uniform variate that picked `chosen`
  std::vector<std::string> function_ids;
  std::vector<double> probabilities;
  std::vector<Label> labels;  // labels[k] = f_k(i)

  std::optional<Label> label_of(const std::string& id) const;

  bool operator==(const SelectionRecord&) const = default;
};

/// Function lookup by id.
using FunctionTable = std::map<std::string, DecisionFunction>;

/// Applies every portfolio function to the instance and samples the emitting one.
SelectionRecord select(const PortfolioState& state, const FunctionTable& functions,
                       const Instance& inst, RngStream& rng);

/// Updates weights from a revealed ground-truth entry. Functions present in the
/// portfolio but absent from the record (inserted after the decision) keep
/// their weight.
void update_weights(PortfolioState& state, const SelectionRecord& record,
                    const GroundTruthEntry& entry);

}  // namespace hedgefair

#include "hedgefair/encoding.hpp"

#include <cmath>

namespace hedgefair {

FeatureEncoding FeatureEncoding::fit(SchemaPtr schema, const std::vector<Instance>& instances) {
  if (!schema) throw ValidationError("encoding needs a schema");
  FeatureEncoding enc;
  enc.schema_ = std::move(schema);
  const auto& s = *enc.schema_;
  enc.stats_.resize(s.size());
  for (std::size_t a = 0; a < s.size(); ++a) {
    const auto& desc = s.at(a);
    enc.first_coord_.push_back(enc.coords_.size());
    if (desc.kind == AttributeKind::numeric) {
      enc.coords_.push_back({a, ""});
      NumericStats st;
      if (!instances.empty()) {
        double sum = 0.0;
        for (const auto& inst : instances) sum += inst.numeric(a);
        st.mean = sum / static_cast<double>(instances.size());
        double ss = 0.0;
        for (const auto& inst : instances) {
          const double d = inst.numeric(a) - st.mean;
          ss += d * d;
        }
        st.sd = std::sqrt(ss / static_cast<double>(instances.size()));
        if (st.sd < 1e-12) st.sd = 1.0;
      }
      enc.stats_[a] = st;
    } else {
      for (const auto& level : desc.levels()) enc.coords_.push_back({a, level});
    }
  }
  return enc;
}

Eigen::VectorXd FeatureEncoding::encode(const Instance& inst) const {
  const auto& s = *schema_;
  validate_instance(s, inst);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
  for (std::size_t a = 0; a < s.size(); ++a) {
    const auto& desc = s.at(a);
    const std::size_t base = first_coord_[a];
    if (desc.kind == AttributeKind::numeric) {
      x[static_cast<Eigen::Index>(base)] = (inst.numeric(a) - stats_[a].mean) / stats_[a].sd;
    } else {
      const std::string& level = desc.level_of(inst.categorical(a));
      for (std::size_t k = base; k < coords_.size() && coords_[k].attr == a; ++k) {
        if (coords_[k].level == level) {
          x[static_cast<Eigen::Index>(k)] = 1.0;
          break;
        }
      }
    }
  }
  return x;
}

Eigen::MatrixXd FeatureEncoding::encode_all(const std::vector<Instance>& instances) const {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(instances.size()),
                    static_cast<Eigen::Index>(dimension()));
  for (std::size_t i = 0; i < instances.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = encode(instances[i]).transpose();
  }
  return X;
}

Instance FeatureEncoding::decode(const Eigen::VectorXd& x, std::uint64_t id) const {
  if (static_cast<std::size_t>(x.size()) != dimension()) {
    throw SchemaError("decode: vector has the wrong dimension");
  }
  const auto& s = *schema_;
  Instance inst;
  inst.id = id;
  for (std::size_t a = 0; a < s.size(); ++a) {
    const auto& desc = s.at(a);
    const std::size_t base = first_coord_[a];
    if (desc.kind == AttributeKind::numeric) {
      inst.values.emplace_back(x[static_cast<Eigen::Index>(base)] * stats_[a].sd + stats_[a].mean);
    } else {
      std::size_t best = base;
      for (std::size_t k = base; k < coords_.size() && coords_[k].attr == a; ++k) {
        if (x[static_cast<Eigen::Index>(k)] > x[static_cast<Eigen::Index>(best)]) best = k;
      }
      inst.values.emplace_back(desc.value_for_level(coords_[best].level));
    }
  }
  return inst;
}

std::vector<std::size_t> FeatureEncoding::coordinates_of(std::size_t attr) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < coords_.size(); ++k) {
    if (coords_[k].attr == attr) out.push_back(k);
  }
  return out;
}

}  // namespace hedgefair

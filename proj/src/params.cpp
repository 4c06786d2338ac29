#include "hexplane/params.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

namespace hexplane {

ParamStore::ParamStore(std::vector<ParamView> slabs) : slabs_(std::move(slabs)) {
  std::unordered_set<std::string> names;
  for (const auto& s : slabs_) {
    if (!names.insert(s.name).second) throw ConfigError("duplicate parameter slab name '" + s.name + "'");
  }
}

std::size_t ParamStore::total() const {
  std::size_t n = 0;
  for (const auto& s : slabs_) n += s.values.size();
  return n;
}

std::size_t ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < slabs_.size(); ++i) {
    if (slabs_[i].name == name) return i;
  }
  throw ConfigError("no parameter slab named '" + name + "'");
}

GradStore::GradStore(const ParamStore& params) {
  for (const auto& s : params.slabs()) data_.emplace_back(s.values.size(), 0.0f);
}

void GradStore::zero() {
  for (auto& d : data_) std::fill(d.begin(), d.end(), 0.0f);
}

std::vector<std::span<float>> GradStore::spans(std::size_t first, std::size_t count) {
  std::vector<std::span<float>> out;
  for (std::size_t i = first; i < first + count; ++i) out.emplace_back(data_.at(i));
  return out;
}

bool GradStore::congruent(const ParamStore& params) const {
  if (params.size() != data_.size()) return false;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (params.slabs()[i].values.size() != data_[i].size()) return false;
  }
  return true;
}

AdamState::AdamState(const ParamStore& params, AdamConfig cfg) : config(cfg) {
  for (const auto& s : params.slabs()) {
    m.emplace_back(s.values.size(), 0.0f);
    v.emplace_back(s.values.size(), 0.0f);
    steps.push_back(0);
  }
}

void AdamState::reset_slab(std::size_t i, std::size_t size) {
  m.at(i).assign(size, 0.0f);
  v.at(i).assign(size, 0.0f);
  steps.at(i) = 0;
}

std::vector<Slab> AdamState::to_slabs(const ParamStore& params) const {
  std::vector<Slab> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::string& name = params.slabs()[i].name;
    out.push_back(Slab{"adam.m." + name, {static_cast<int>(m[i].size())}, m[i]});
    out.push_back(Slab{"adam.v." + name, {static_cast<int>(v[i].size())}, v[i]});
    out.push_back(Slab{"adam.step." + name, {1}, {static_cast<float>(steps[i])}});
  }
  return out;
}

AdamState AdamState::from_slabs(const ParamStore& params, const std::vector<Slab>& slabs, AdamConfig cfg) {
  AdamState st(params, cfg);
  auto lookup = [&](const std::string& name) -> const Slab& {
    for (const auto& s : slabs) {
      if (s.name == name) return s;
    }
    throw IoError("optimizer state is missing slab '" + name + "'");
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.slabs()[i].name;
    const Slab& m = lookup("adam.m." + name);
    const Slab& v = lookup("adam.v." + name);
    if (m.data.size() != st.m[i].size() || v.data.size() != st.v[i].size()) {
      throw IoError("optimizer state for '" + name + "' has the wrong size");
    }
    st.m[i] = m.data;
    st.v[i] = v.data;
    st.steps[i] = static_cast<std::int64_t>(lookup("adam.step." + name).data.at(0));
  }
  return st;
}

void adam_step(ParamStore& params, const GradStore& grads, AdamState& state, std::span<const double> lrs) {
  if (!grads.congruent(params) || state.m.size() != params.size() || lrs.size() != params.size()) {
    throw ConfigError("adam_step: parameter, gradient and state shapes differ");
  }
  const double b1 = state.config.beta1;
  const double b2 = state.config.beta2;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& values = params.slabs()[i].values;
    const auto& g = grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != values.size()) throw ConfigError("adam_step: moment slab has the wrong size");
    const std::int64_t t = ++state.steps[i];
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    const double lr = lrs[i];
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double gk = g[k];
      const double mk = b1 * m[k] + (1.0 - b1) * gk;
      const double vk = b2 * v[k] + (1.0 - b2) * gk * gk;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      if (lr == 0.0) continue;
      values[k] = static_cast<float>(values[k] - lr * (mk / c1) / (std::sqrt(vk / c2) + state.config.eps));
    }
  }
}

double decayed_lr(double lr0, double ratio, std::int64_t iter, std::int64_t total_iters) {
  if (total_iters <= 0) return lr0;
  return lr0 * std::pow(ratio, static_cast<double>(iter) / static_cast<double>(total_iters));
}

GradCheckReport grad_check(ParamStore& params, const LossFunction& loss, const GradCheckOptions& options) {
  GradStore analytic(params);
  loss(&analytic);
  const std::uint64_t base_regime = options.regime ? options.regime() : 0;

  // Candidate entries per slab.
  std::vector<std::vector<std::size_t>> candidates(params.size());
  for (std::size_t s = 0; s < params.size(); ++s) {
    for (std::size_t k = 0; k < analytic[s].size(); ++k) {
      if (std::abs(analytic[s][k]) > options.min_grad) candidates[s].push_back(k);
    }
  }
  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  double sum = 0.0;
  std::size_t slab = 0;
  std::size_t empty_rounds = 0;
  while (report.probes < options.n_probes && empty_rounds < params.size()) {
    const std::size_t s = slab++ % params.size();
    if (candidates[s].empty()) {
      ++empty_rounds;
      continue;
    }
    empty_rounds = 0;
    std::uniform_int_distribution<std::size_t> pick(0, candidates[s].size() - 1);
    const std::size_t k = candidates[s][pick(rng)];
    float& p = params.slabs()[s].values[k];
    const float original = p;
    p = static_cast<float>(original + options.h);
    const float plus = p;
    const double lp = loss(nullptr);
    const bool kink_plus = options.regime && options.regime() != base_regime;
    p = static_cast<float>(original - options.h);
    const float minus = p;
    const double lm = loss(nullptr);
    const bool kink_minus = options.regime && options.regime() != base_regime;
    p = original;
    if (kink_plus || kink_minus) {
      if (++report.rejected > options.max_rejected) break;
      continue;
    }
    const double numeric = (lp - lm) / (static_cast<double>(plus) - static_cast<double>(minus));
    const double a = analytic[s][k];
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), options.abs_floor});
    sum += err;
    if (err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_slab = params.slabs()[s].name;
    }
    report.probe_slabs.push_back(params.slabs()[s].name);
    ++report.probes;
  }
  report.mean_rel_error = report.probes ? sum / static_cast<double>(report.probes) : 0.0;
  return report;
}

}  // namespace hexplane

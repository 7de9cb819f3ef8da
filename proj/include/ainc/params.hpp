#pragma once

#include <string>
#include <vector>

#include "ainc/common.hpp"
#include "ainc/tensor.hpp"

namespace ainc {

struct NamedParam {
  std::string name;
  ag::Shape shape;
  std::vector<double> vals;
};

// Ordered, named parameter set. Order is load-bearing: it fixes RNG
// consumption at init, gradient-update order, and checkpoint layout.
struct ParamStore {
  std::vector<NamedParam> params;

  NamedParam& add(std::string name, ag::Shape shape, std::vector<double> vals) {
    check(vals.size() == shape.size(), "param ", name, ": value count mismatch");
    check(find(name) == nullptr, "param ", name, ": duplicate name");
    params.push_back({std::move(name), shape, std::move(vals)});
    return params.back();
  }

  const NamedParam* find(const std::string& name) const {
    for (const auto& p : params)
      if (p.name == name) return &p;
    return nullptr;
  }
  NamedParam* find(const std::string& name) {
    for (auto& p : params)
      if (p.name == name) return &p;
    return nullptr;
  }

  const NamedParam& get(const std::string& name) const {
    const NamedParam* p = find(name);
    check(p != nullptr, "param ", name, ": not found");
    return *p;
  }

  std::size_t value_count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.vals.size();
    return n;
  }
};

// Concatenation of two stores; duplicate names are an error.
inline ParamStore merge_stores(const ParamStore& a, const ParamStore& b) {
  ParamStore out = a;
  for (const auto& p : b.params) out.add(p.name, p.shape, p.vals);
  return out;
}

// Classic SGD with momentum: v ← momentum·v + grad_scale·grad; θ ← θ − lr·v.
class SgdState {
 public:
  explicit SgdState(const ParamStore& store) {
    for (const auto& p : store.params) velocity_.emplace_back(p.vals.size(), 0.0);
  }

  void step(ParamStore& store, const std::vector<std::vector<double>>& grads,
            double lr, double momentum, double grad_scale);

 private:
  std::vector<std::vector<double>> velocity_;
};

}  // namespace ainc

#include "sgain/certify.hpp"

#include <json.hpp>

namespace sgain {

namespace {

using nlohmann::ordered_json;

ordered_json number(const Rational& q) { return {{"decimal", to_decimal_string(q)}, {"exact", to_fraction_string(q)}}; }

ordered_json number(const RadicalNumber& r) {
  ordered_json j{{"decimal", r.decimal()}};
  j["exact"] = r.exact ? ordered_json(r.exact_string()) : ordered_json(nullptr);
  return j;
}

template <typename T>
ordered_json optional_number(const std::optional<T>& v) {
  return v ? number(*v) : ordered_json(nullptr);
}

ordered_json trace_array(const std::vector<TraceEntry>& entries) {
  ordered_json arr = ordered_json::array();
  for (const auto& t : entries) {
    ordered_json e{{"term", t.term}};
    e["value"] = t.decimal.empty() ? ordered_json(nullptr)
                                   : ordered_json{{"decimal", t.decimal},
                                                  {"exact", t.exact.empty() ? ordered_json(nullptr) : ordered_json(t.exact)}};
    e["formula"] = t.formula;
    arr.push_back(std::move(e));
  }
  return arr;
}

}  // namespace

std::string certificate_json(const GainCertificate& cert, int indent) {
  ordered_json j;
  j["model"] = cert.model;
  j["kind"] = to_string(cert.kind);
  j["verdict"] = to_string(cert.verdict);
  j["lambda"] = optional_number(cert.lambda);
  j["er_bound"] = optional_number(cert.er_bound);
  j["M"] = optional_number(cert.M);
  j["gain_constant"] = optional_number(cert.gain_constant);
  if (cert.lyapunov) {
    const auto& l = *cert.lyapunov;
    j["lyapunov"] = {{"K1_squared", number(l.frobenius_square)},
                     {"K1", number(l.k1_rounded)},
                     {"K2", number(l.k2)},
                     {"K3", number(l.k3)},
                     {"mao_bound", number(l.bound)},
                     {"mao_bound_sharp", {{"decimal", l.sharp_bound_decimal()}, {"exact", nullptr}}}};
  } else {
    j["lyapunov"] = nullptr;
  }
  ordered_json checks = ordered_json::array();
  for (const auto& c : cert.structural_checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  j["structural_checks"] = std::move(checks);
  j["trace"] = trace_array(cert.trace);
  j["advisory"] = trace_array(cert.advisory);
  return j.dump(indent);
}

}  // namespace sgain
